import csv
import json
import math

import numpy as np
import pytest

from boundmodes.cli import main

GAAS_CFG = "a=1\nb=0.25\nd=1\neps1=13\neps2_re=1\nn_max=3\n"
SILVER_CFG = "a=1\nb=0.25\nd=1\neps1=2.3\neps2_re=-20\nn_max=3\n"


def run(tmp_path, *args, cfg=GAAS_CFG, name="run"):
    conf = tmp_path / "cavity.cfg"
    conf.write_text(cfg)
    out = tmp_path / name
    code = main(list(args) + ["--config", str(conf), "--out", str(out)])
    return code, out


def read(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_modes_gaas(tmp_path):
    code, out = run(tmp_path, "modes")
    assert code == 0
    header, rows = read(out / "modes.csv")
    assert header[:10] == ["n", "Re(kz)a", "Im(kz)a", "Re(k)a", "Im(k)a", "|kx|a", "q*a",
                           "gamma*a", "in_gap", "residual"]
    assert len(rows) == 3
    assert float(rows[0][1]) == pytest.approx(3.8706535524506943, rel=1e-14)
    assert float(rows[0][6]) == pytest.approx(0.29329736648292445, rel=1e-13)
    assert all(r[8] == "true" for r in rows)
    manifest = json.loads((out / "manifest_modes.json").read_text())
    assert manifest["outputs"] == ["modes.csv", "modes_meta.json"]


def test_modes_empty(tmp_path):
    code, out = run(tmp_path, "modes", cfg=GAAS_CFG.replace("n_max=3", "n_max=0"))
    assert code == 0
    header, rows = read(out / "modes.csv")
    assert rows == [] and header[0] == "n"


def test_modes_silver_uses_scan(tmp_path):
    code, out = run(tmp_path, "modes", "--ref-q1a", "0.80", cfg=SILVER_CFG)
    assert code == 0
    _, rows = read(out / "modes.csv")
    assert {r[-1] for r in rows} == {"scan"}
    meta = json.loads((out / "modes_meta.json").read_text())
    cmp = meta["reference_comparison"]
    assert cmp["reference_q1a"] == 0.80
    assert cmp["thin_layer_q1a"] == pytest.approx(1.162123238046581, rel=1e-12)
    assert "finite_width_q1a" in cmp


def test_modes_lossy_gamma_column(tmp_path):
    code, out = run(tmp_path, "modes", "--loss-fraction", "0.01")
    _, rows = read(out / "modes.csv")
    assert float(rows[0][7]) == pytest.approx(0.13622711607543535, rel=1e-13)
    assert float(rows[0][4]) < 0


def test_spectrum_peaks(tmp_path):
    code, out = run(tmp_path, "spectrum", "--loss-fraction", "0.01", "--k-min", "0.5",
                    "--k-max", "12", "--points", "4601", "--plot-script")
    assert code == 0
    header, rows = read(out / "spectrum.csv")
    assert header == ["k*a", "Gamma_1/Gamma", "Gamma_2/Gamma", "Gamma_3/Gamma",
                      "Gamma_prop/Gamma", "beta"]
    data = np.array(rows, dtype=float)
    for col, kn in zip((1, 2, 3), (1.9515135674883009, 6.5115810067600225, 10.067320754469479)):
        assert data[np.argmax(data[:, col]), 0] == pytest.approx(kn, abs=5e-3)
    total = data[:, 1:4].sum(axis=1)
    assert np.max(np.abs(data[:, 5] - total / (total + data[:, 4]))) < 1e-12
    assert (out / "spectrum_plot.gp").exists()
    assert not (out / "spectrum_deltas.csv").exists()


def test_spectrum_lossless_sidecar(tmp_path):
    code, out = run(tmp_path, "spectrum", "--points", "101")
    assert code == 0
    _, rows = read(out / "spectrum.csv")
    assert all(float(r[1]) == 0 for r in rows)
    _, deltas = read(out / "spectrum_deltas.csv")
    assert [int(d[0]) for d in deltas] == [1, 2, 3]


def _by_eps2(rows, eps2, n):
    return next(r for r in rows if float(r[0]) == eps2 and int(r[1]) == n)


def test_beta_sweep(tmp_path):
    code, out = run(tmp_path, "beta-sweep", "--loss-fraction", "0.01", "--eps2-range=-3:6:10")
    assert code == 0
    _, rows = read(out / "beta_sweep.csv")
    assert float(_by_eps2(rows, 1.0, 1)[2]) == pytest.approx(0.968, abs=5e-4)
    code, out = run(tmp_path, "beta-sweep", "--loss-fraction", "0", "--eps2-range=-3:6:10",
                    name="zero")
    _, rows = read(out / "beta_sweep.csv")
    assert all(float(r[2]) == 1.0 for r in rows if r[3] == "ok")


def test_beta_sweep_flags_infeasible(tmp_path):
    code, out = run(tmp_path, "beta-sweep", "--loss-fraction", "0.01", "--eps2-range", "6:8:3")
    _, rows = read(out / "beta_sweep.csv")
    assert {r[3] for r in rows if float(r[0]) > 6.5} == {"infeasible"}


def test_threshold_sweep(tmp_path):
    args = ["threshold-sweep", "--eps2-range=-3:6:10", "--beta-mode", "unity"]
    code, out = run(tmp_path, *args, "--loss-fraction", "0.01")
    assert code == 0
    _, rows = read(out / "threshold_sweep.csv")
    assert float(_by_eps2(rows, 1.0, 1)[3]) == pytest.approx(-0.0697, abs=1e-4)
    _, zero = read(run(tmp_path, *args, "--loss-fraction", "0", name="z")[1] / "threshold_sweep.csv")
    assert all(float(r[3]) == 0 for r in zero if r[5] == "ok")
    _, double = read(run(tmp_path, *args, "--loss-fraction", "0.02", name="d")[1] / "threshold_sweep.csv")
    for r1, r2 in zip(rows, double):
        if r1[5] == "ok":
            assert float(r2[3]) == pytest.approx(2 * float(r1[3]), rel=1e-12)


def test_band_empty_lattice(tmp_path):
    code, out = run(tmp_path, "band", cfg="eps1=13\neps2_re=13\n")
    assert code == 0
    header, rows = read(out / "gaps.csv")
    assert header == ["n", "kz_lo*a", "kz_hi*a"] and rows == []
    assert read(out / "band.csv")[0] == ["kz*a", "cos(pa)"]


def test_band_gaas_gap(tmp_path):
    code, out = run(tmp_path, "band")
    _, rows = read(out / "gaps.csv")
    lo, hi = float(rows[0][1]), float(rows[0][2])
    assert lo < 3.8706535524506943 < hi


def test_field_grid(tmp_path):
    code, out = run(tmp_path, "field", "--grid", "3,3,3")
    assert code == 0
    header, rows = read(out / "field.csv")
    assert header == ["x", "y", "z", "Re(Ex)", "Im(Ex)", "Re(Ey)", "Im(Ey)", "Re(Ez)", "Im(Ez)"]
    assert len(rows) == 27


def test_leakage(tmp_path):
    code, out = run(tmp_path, "leakage", "--n-range", "4:8")
    assert code == 0
    _, rows = read(out / "leakage.csv")
    frac = {int(r[0]): float(r[1]) for r in rows}
    assert frac[4] > 1e-10 > frac[5]
    assert frac[6] == pytest.approx(8.27e-14, rel=1e-2)


def test_gamma_prop_table(tmp_path):
    table = tmp_path / "prop.csv"
    table.write_text("0,2\n20,2\n")
    code, out = run(tmp_path, "beta-sweep", "--loss-fraction", "0.01", "--eps2-range", "1:1:1",
                    "--gamma-prop-model", f"table:{table}")
    assert code == 0
    _, rows = read(out / "beta_sweep.csv")
    peak = 30.216459491899319
    assert float(rows[0][2]) == pytest.approx(peak / (peak + 2), rel=1e-12)
    manifest = json.loads((out / "manifest_beta-sweep.json").read_text())
    assert manifest["gamma_prop_model"] == "table"


def test_exit_codes(tmp_path):
    assert run(tmp_path, "modes", cfg="eps1=13\nfoo=1\n")[0] == 1
    assert run(tmp_path, "modes", "--gamma-prop-model", "nonsense")[0] == 1
    blocker = tmp_path / "blocker"
    blocker.write_text("x")
    conf = tmp_path / "c.cfg"
    conf.write_text(GAAS_CFG)
    assert main(["modes", "--config", str(conf), "--out", str(blocker)]) == 3
    # chi/d above -1/2: no transversely bound mode to sample
    assert run(tmp_path, "field", cfg="eps1=13\neps2_re=10\n", name="nf")[0] == 2


def test_rerun_is_byte_identical(tmp_path):
    _, a = run(tmp_path, "modes", "--loss-fraction", "0.01", name="a")
    _, b = run(tmp_path, "modes", "--loss-fraction", "0.01", name="b")
    for f in ("modes.csv", "modes_meta.json", "manifest_modes.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_digest_depends_on_config(tmp_path):
    _, a = run(tmp_path, "modes", name="a")
    _, b = run(tmp_path, "modes", "--loss-fraction", "0.01", name="b")
    da = json.loads((a / "manifest_modes.json").read_text())["config_digest"]
    db = json.loads((b / "manifest_modes.json").read_text())["config_digest"]
    assert da != db
