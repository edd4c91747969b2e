"""Command-line front end: modes, spectra, sweeps, bands, fields and leakage.

Every command writes CSV files (17 significant digits, header row) plus a
``manifest_<command>.json`` listing them.  Exit codes: 0 success, 1 config
error, 2 solver failure at any point, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from . import dispersion as disp
from . import emission, finitewidth, modes
from .model import (CavitySpec, ConfigError, EffectiveParams, RunConfig, bound_mode_feasible,
                    effective_params, parse_config)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3

MODES_HEADER = ["n", "Re(kz)a", "Im(kz)a", "Re(k)a", "Im(k)a", "|kx|a", "q*a", "gamma*a",
                "in_gap", "residual", "seed_mode"]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


@dataclass
class Context:
    config: RunConfig
    out: str
    gamma_prop: emission.GammaPropModel
    options: dict

    @property
    def spec(self) -> CavitySpec:
        return self.config.spec.normalized()

    def params(self, spec=None) -> EffectiveParams:
        return effective_params(spec or self.spec, self.config.loss_fraction)

    def digest(self, command) -> str:
        text = self.config.canonical() + f"command={command}\n" + "".join(
            f"{k}={v!r}\n" for k, v in sorted(self.options.items()))
        text += f"gamma_prop={self.gamma_prop.label}\n"
        return hashlib.sha256(text.encode()).hexdigest()


def write_manifest(ctx: Context, command: str, outputs: list, extra=None):
    path = os.path.join(ctx.out, f"manifest_{command}.json")
    manifest = {
        "command": command,
        "config_digest": ctx.digest(command),
        "outputs": [os.path.basename(p) for p in outputs],
        "versions": {"boundmodes": __version__, "numpy": np.__version__},
        "gamma_prop_model": ctx.gamma_prop.label,
    }
    if extra:
        manifest.update(extra)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _gain(params: EffectiveParams) -> complex:
    return 1j * params.alpha.imag


def mode_rows(spec: CavitySpec, params: EffectiveParams, n_max: int):
    """Rows of the modes table and a failure flag."""
    passive = params.real_part()
    bound = modes.solve_modes(passive, spec, n_max)
    solved = bound if params.lossless else modes.solve_modes(params, spec, n_max)
    rows, failed = [], False
    for b, m in zip(bound, solved):
        if not m.converged:
            failed = True
            rows.append([m.n] + [math.nan] * 9 + [m.seed_mode])
            continue
        try:
            gamma = emission.linewidth(b, params, spec, _gain(params))
            gamma = gamma.real if isinstance(gamma, complex) else gamma
        except emission.NotBoundError:
            gamma = math.nan
        gap = disp.in_gap(m.kz.real, params.xi_r, spec.a)
        a = spec.a
        rows.append([m.n, m.kz.real * a, m.kz.imag * a, m.k.real * a, m.k.imag * a,
                     abs(m.kx) * a, m.q * a, gamma * a, gap.inside, m.residual, m.seed_mode])
    return rows, failed, bound


def _finite_width_summary(spec, params, count):
    if count == 0:
        return []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", finitewidth.EvanescentSlabWarning)
        found = finitewidth.defect_modes(params.xi_r, params.alpha.real, spec.b, spec.a,
                                         kz_max=(count + 3) * math.pi / spec.a)
    return [{"n": i, "kz_a": d.kz * spec.a, "q_a": d.q * spec.a}
            for i, d in enumerate(found[:count], start=1)]


def cmd_modes(ctx: Context) -> int:
    spec, params = ctx.spec, ctx.params()
    n_max = ctx.config.n_max
    rows, failed, bound = mode_rows(spec, params, n_max)
    path = os.path.join(ctx.out, "modes.csv")
    write_csv(path, MODES_HEADER, rows)
    eps1 = spec.eps1
    thin = [{"n": m.n, "kz_a": m.kz.real, "q_a": m.q, "k_a": m.k.real,
             "a_over_lambda_medium": m.k.real / (2 * math.pi),
             "a_over_lambda_vacuum": m.k.real / (2 * math.pi * math.sqrt(eps1)),
             "a_over_lambda_z": m.kz.real / (2 * math.pi)} for m in bound]
    meta = {"thin_layer": thin, "finite_width": _finite_width_summary(spec, params, len(bound))}
    ref = ctx.options.get("ref_q1a")
    if ref is not None:
        cmp = {"reference_q1a": ref}
        if thin:
            cmp["thin_layer_q1a"] = thin[0]["q_a"]
            cmp["thin_layer_discrepancy"] = thin[0]["q_a"] - ref
        if meta["finite_width"]:
            cmp["finite_width_q1a"] = meta["finite_width"][0]["q_a"]
            cmp["finite_width_discrepancy"] = meta["finite_width"][0]["q_a"] - ref
        cmp["note"] = "reference value compared, not enforced"
        meta["reference_comparison"] = cmp
    meta_path = os.path.join(ctx.out, "modes_meta.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(ctx, "modes", [path, meta_path])
    return EXIT_SOLVER if failed else EXIT_OK


def _resonances(spec, params, n_max):
    bound = modes.solve_modes(params.real_part(), spec, n_max)
    return emission.resonances(bound, params, spec)


PLOT_TEMPLATE = """# gnuplot commands; run: gnuplot -p {name}
set datafile separator ','
set key autotitle columnhead
set logscale y
set xlabel 'k a'
plot {series}
"""


def cmd_spectrum(ctx: Context) -> int:
    spec, params = ctx.spec, ctx.params()
    o = ctx.options
    if not 0 < o["k_min"] < o["k_max"]:
        raise ConfigError("need 0 < k_min < k_max")
    grid = np.linspace(o["k_min"], o["k_max"], o["points"])
    res = _resonances(spec, params, ctx.config.n_max)
    spec_out = emission.spectrum(grid, res, ctx.gamma_prop)
    n_cols = len(res)
    header = ["k*a"] + [f"Gamma_{r.mode.n}/Gamma" for r in res] + ["Gamma_prop/Gamma", "beta"]
    rows = [[grid[i]] + [spec_out.Gamma_n_over_Gamma[j][i] for j in range(n_cols)]
            + [spec_out.Gamma_prop_over_Gamma[i], spec_out.beta[i]] for i in range(len(grid))]
    path = os.path.join(ctx.out, "spectrum.csv")
    write_csv(path, header, rows)
    outputs = [path]
    if spec_out.deltas:
        dpath = os.path.join(ctx.out, "spectrum_deltas.csv")
        write_csv(dpath, ["n", "k_n*a", "weight"], spec_out.deltas)
        outputs.append(dpath)
    if o.get("plot_script"):
        ppath = os.path.join(ctx.out, "spectrum_plot.gp")
        series = ", ".join(f"'spectrum.csv' using 1:{j}" for j in range(2, n_cols + 4))
        with open(ppath, "w") as fh:
            fh.write(PLOT_TEMPLATE.format(name="spectrum_plot.gp", series=series))
        outputs.append(ppath)
    write_manifest(ctx, "spectrum", outputs)
    return EXIT_OK


def parse_range(text: str, kind=float):
    parts = text.split(":")
    try:
        if kind is int:
            if len(parts) != 2:
                raise ValueError
            lo, hi = int(parts[0]), int(parts[1])
            return list(range(lo, hi + 1))
        if len(parts) != 3:
            raise ValueError
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"bad range {text!r}") from None
    if count < 1:
        raise ConfigError("range needs at least one point")
    return [float(v) for v in np.linspace(lo, hi, count)]


def _sweep_point(args):
    """Per-eps2 rows for the beta and threshold sweeps (picklable)."""
    spec, loss_fraction, n_max, eps2, gamma_prop, beta_mode = args
    s = spec.with_eps2(complex(eps2, spec.eps2.imag))
    params = effective_params(s, loss_fraction)
    if not bound_mode_feasible(params, s).feasible:
        return [(n, None, None, "infeasible") for n in range(1, n_max + 1)], False
    try:
        res = _resonances(s, params, n_max)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return [(n, None, None, f"solver-error:{type(exc).__name__}")
                for n in range(1, n_max + 1)], True
    out = []
    for r in res:
        beta = emission.peak_beta(r, gamma_prop)
        b_used = beta if beta_mode == "peak" else 1.0
        th = emission.threshold_gain(r.mode, params, s, b_used) if b_used > 0 else None
        out.append((r.mode.n, beta, th, "ok"))
    for n in range(len(res) + 1, n_max + 1):
        out.append((n, None, None, "no-root"))
    return out, False


def _run_sweep(ctx: Context):
    eps2_values = parse_range(ctx.options["eps2_range"])
    spec = ctx.spec
    tasks = [(spec, ctx.config.loss_fraction, ctx.config.n_max, e, ctx.gamma_prop,
              ctx.options.get("beta_mode", "peak")) for e in eps2_values]
    jobs = ctx.options.get("jobs", 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    return eps2_values, results


def cmd_beta_sweep(ctx: Context) -> int:
    eps2_values, results = _run_sweep(ctx)
    rows, failed = [], False
    for e, (pts, err) in zip(eps2_values, results):
        failed |= err
        for n, beta, _, status in pts:
            rows.append([e, n, math.nan if beta is None else beta, status])
    path = os.path.join(ctx.out, "beta_sweep.csv")
    write_csv(path, ["eps2", "n", "beta_n", "status"], rows)
    write_manifest(ctx, "beta-sweep", [path])
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_threshold_sweep(ctx: Context) -> int:
    eps2_values, results = _run_sweep(ctx)
    rows, failed = [], False
    for e, (pts, err) in zip(eps2_values, results):
        failed |= err
        for n, beta, th, status in pts:
            if th is None:
                rows.append([e, n, math.nan, math.nan, math.nan, status])
            else:
                al = th.alpha_threshold / ctx.spec.a
                rows.append([e, n, al.real, al.imag, th.beta_used, status])
    path = os.path.join(ctx.out, "threshold_sweep.csv")
    write_csv(path, ["eps2", "n", "Re(alpha)/a", "Im(alpha)/a", "beta_used", "status"], rows)
    write_manifest(ctx, "threshold-sweep", [path])
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_band(ctx: Context) -> int:
    spec, params = ctx.spec, ctx.params()
    o = ctx.options
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", finitewidth.EvanescentSlabWarning)
        bs = finitewidth.band_structure((o["kz_min"], o["kz_max"]), params.xi_r, spec.b,
                                        spec.a, points=o["points"])
    a = spec.a
    band_path = os.path.join(ctx.out, "band.csv")
    write_csv(band_path, ["kz*a", "cos(pa)"], zip(bs.kz_grid * a, bs.half_trace))
    gaps_path = os.path.join(ctx.out, "gaps.csv")
    write_csv(gaps_path, ["n", "kz_lo*a", "kz_hi*a"],
              [(i, lo * a, hi * a) for i, (lo, hi) in enumerate(bs.gaps, start=1)])
    write_manifest(ctx, "band", [band_path, gaps_path])
    return EXIT_OK


def _single_mode(ctx: Context, n: int):
    spec, params = ctx.spec, ctx.params()
    found = modes.solve_modes(params, spec, n)
    if len(found) < n or not found[n - 1].converged:
        return None
    return found[n - 1]


def cmd_field(ctx: Context) -> int:
    o = ctx.options
    try:
        counts = [int(v) for v in o["grid"].split(",")]
        extent = [float(v) for v in o["extent"].split(",")]
    except ValueError:
        raise ConfigError("grid and extent take three comma-separated values") from None
    if len(counts) != 3 or len(extent) != 3 or min(counts) < 1:
        raise ConfigError("grid and extent take three comma-separated values")
    mode = _single_mode(ctx, o["mode"])
    if mode is None:
        return EXIT_SOLVER
    axes = [np.linspace(-e, e, c) if c > 1 else np.zeros(1) for e, c in zip(extent, counts)]
    samples = modes.field_grid(mode, *axes)
    a = ctx.spec.a
    rows = []
    for s in samples:
        row = [c * a for c in s.position]
        for comp in s.E:
            row += [comp.real, comp.imag]
        rows.append(row)
    path = os.path.join(ctx.out, "field.csv")
    write_csv(path, modes.FIELD_HEADER, rows)
    write_manifest(ctx, "field", [path])
    return EXIT_OK


def cmd_leakage(ctx: Context) -> int:
    Ns = parse_range(ctx.options["n_range"], int)
    mode = _single_mode(ctx, ctx.options["mode"])
    if mode is None:
        return EXIT_SOLVER
    spec = ctx.spec
    rows = []
    for N in Ns:
        frac = modes.leakage_fraction(N, mode, spec)
        rows.append([N, frac, math.log10(frac) if frac > 0 else -math.inf])
    path = os.path.join(ctx.out, "leakage.csv")
    write_csv(path, ["N", "fraction", "log10_fraction"], rows)
    write_manifest(ctx, "leakage", [path])
    return EXIT_OK


COMMANDS = {
    "modes": cmd_modes,
    "spectrum": cmd_spectrum,
    "beta-sweep": cmd_beta_sweep,
    "threshold-sweep": cmd_threshold_sweep,
    "band": cmd_band,
    "field": cmd_field,
    "leakage": cmd_leakage,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value cavity file (default: GaAs example)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--loss-fraction", type=float, default=None,
                        help="override eta=f|chi|, zeta=f|xi|")
    common.add_argument("--gamma-prop-model", default="background",
                        help="background | constant:VALUE | table:PATH")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    parser = argparse.ArgumentParser(prog="boundmodes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modes", parents=[common], help="resonances n=1..n_max")
    p.add_argument("--ref-q1a", type=float, default=None,
                   help="reference q_1 a to compare against in modes_meta.json")

    p = sub.add_parser("spectrum", parents=[common], help="emission spectrum on a k grid")
    p.add_argument("--k-min", type=float, default=0.5)
    p.add_argument("--k-max", type=float, default=12.0)
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--plot-script", action="store_true", help="also write a gnuplot script")

    sweeps = {"beta-sweep": "peak beta_n versus eps2", "threshold-sweep": "threshold gain versus eps2"}
    for name, text in sweeps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--eps2-range", default="-4:6:41", help="start:stop:count")
        p.add_argument("--beta-mode", choices=["peak", "unity"], default="peak",
                       help="beta used in the threshold gain")

    p = sub.add_parser("band", parents=[common], help="finite-width lattice band structure")
    p.add_argument("--kz-min", type=float, default=1e-3)
    p.add_argument("--kz-max", type=float, default=4 * math.pi)
    p.add_argument("--points", type=int, default=1024)

    p = sub.add_parser("field", parents=[common], help="vector field on a grid")
    p.add_argument("--grid", default="11,11,21", help="nx,ny,nz")
    p.add_argument("--extent", default="1,1,3", help="half-widths X,Y,Z in units of a")
    p.add_argument("--mode", type=int, default=1)

    p = sub.add_parser("leakage", parents=[common], help="finite-size leakage fraction")
    p.add_argument("--n-range", default="1:10", help="Nmin:Nmax")
    p.add_argument("--mode", type=int, default=1)
    return parser


OPTION_SKIP = {"command", "config", "out", "loss_fraction", "gamma_prop_model", "jobs"}


def load_context(args) -> Context:
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        config = parse_config(text)
    else:
        config = RunConfig(CavitySpec())
    if args.loss_fraction is not None:
        if args.loss_fraction < 0:
            raise ConfigError("loss fraction must be >= 0")
        config = replace(config, loss_fraction=args.loss_fraction)
    try:
        gp = emission.GammaPropModel.parse(args.gamma_prop_model)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"--gamma-prop-model: {exc}") from None
    options = {k: v for k, v in vars(args).items() if k not in OPTION_SKIP}
    options["jobs"] = max(1, args.jobs)
    return Context(config, args.out, gp, options)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ctx = load_context(args)
        os.makedirs(ctx.out, exist_ok=True)
        return COMMANDS[args.command](ctx)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
