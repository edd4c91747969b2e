import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boundmodes import dispersion as disp
from boundmodes.model import CavitySpec, EffectiveParams, effective_params

# Roots frozen from a 40-digit mpmath solve of sin x + xi x cos x = 0.
GAAS_KZ = [3.8706535524506943, 7.3194426650262199, 10.607756638063497]
GAAS_K = [1.9515135674883009, 6.5115810067600225, 10.067320754469479]
GAAS_Q = [0.29329736648292445, 0.67443460851395494, 0.97241399912821931]
SILVER_KZ = [1.2526343840090265, 4.6233923642286314]


def gaas_p(alpha=0j):
    return EffectiveParams(-12 / 13 + 0j, -3 / 13 + 0j, alpha)


def test_transverse_k_gaas(gaas):
    assert disp.transverse_k(gaas_p(), gaas) == pytest.approx(26j / 11)


def test_transverse_k_silver(silver):
    kx = disp.transverse_k(effective_params(silver), silver)
    assert kx.real == 0
    assert kx.imag == pytest.approx(0.10875, abs=1e-5)


def test_transverse_k_monotone_in_chi(gaas):
    chis = [-1.0, -2.0, -10.0, -1e3, -1e6]
    vals = [abs(disp.transverse_k(EffectiveParams(c + 0j, 0j), gaas)) for c in chis]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert vals[-1] < 1e-5


def test_transverse_k_degenerate(gaas):
    with pytest.raises(disp.DegenerateError):
        disp.transverse_k(EffectiveParams(-0.5 + 0j, 0j), gaas)


def test_total_k_gaas(gaas):
    k = disp.total_k(GAAS_KZ[0], gaas_p(), gaas)
    assert k.imag == 0
    assert k == pytest.approx(GAAS_K[0], rel=1e-14)
    assert k ** 2 == pytest.approx(3.807, abs=2e-3)


def test_total_k_cutoff(gaas):
    kz_cut = math.sqrt(8) / (2 * 12 / 13 - 1)
    assert abs(disp.total_k(kz_cut, gaas_p(), gaas)) < 1e-7


def test_total_k_silver(silver):
    k = disp.total_k(SILVER_KZ[1], effective_params(silver), silver)
    assert k.real == pytest.approx(4.6208338115594615, rel=1e-12)


def test_quasi_momentum_gaas():
    p = disp.quasi_momentum(GAAS_KZ[0], 0, 1.0)
    assert p.real == pytest.approx(math.pi)
    assert p.imag == pytest.approx(GAAS_Q[0], rel=1e-13)
    assert disp.bloch_factor(GAAS_KZ[0], 0, 1.0).real == pytest.approx(-0.7457, abs=1e-3)


def test_quasi_momentum_degenerate():
    with pytest.raises(disp.DegenerateError):
        disp.quasi_momentum(math.pi / 2, 0, 1.0)


def test_quasi_momentum_rejects_growth():
    with pytest.raises(disp.GrowingEnvelopeError):
        disp.quasi_momentum(1.2535, -2.4239, 1.0)


def test_quasi_momentum_branch_is_continuous_through_pi():
    e_above = disp.quasi_momentum(GAAS_KZ[0] + 1e-4j, 0, 1.0)
    e_below = disp.quasi_momentum(GAAS_KZ[0] - 1e-4j, 0, 1.0)
    assert abs(e_above - e_below) < 1e-3
    assert e_above.imag > 0 and e_below.imag > 0


def test_bulk_value_silver_low_root(silver):
    ht = disp.bloch_factor(SILVER_KZ[0], effective_params(silver).xi, 1.0)
    assert ht.real == pytest.approx(1.7547673702272532, rel=1e-12)


def test_residual_lossless_alpha_zero_reduces():
    p = gaas_p()
    kz = 2.0
    F, _ = disp.dispersion_residual(kz, p, 1.0)
    assert F == pytest.approx((2 / kz) ** 2 * (1 + p.xi * kz / math.tan(kz)), rel=1e-14)


@pytest.mark.parametrize("kz", GAAS_KZ)
def test_residual_vanishes_at_gaas_roots(kz):
    F, _ = disp.dispersion_residual(kz, gaas_p(), 1.0)
    assert abs(F) < 1e-12


@pytest.mark.parametrize("kz", SILVER_KZ)
def test_residual_vanishes_at_silver_roots(silver, kz):
    F, _ = disp.dispersion_residual(kz, effective_params(silver), 1.0)
    assert abs(F) < 1e-12 * max(1, 2.4239 ** 2)


def test_residual_pole_guard():
    with pytest.raises(disp.PoleError):
        disp.dispersion_residual(math.pi, gaas_p(), 1.0)


@given(re=st.floats(0.3, 12), im=st.floats(-0.5, 0.5),
       xi=st.complex_numbers(max_magnitude=3), alpha=st.complex_numbers(max_magnitude=1))
@settings(max_examples=200)
def test_residual_derivative_matches_complex_step(re, im, xi, alpha):
    z = complex(re, im)
    if abs(cmath.sin(z)) < 1e-2:
        return
    p = EffectiveParams(-1 + 0j, xi, alpha)
    _, dF = disp.dispersion_residual(z, p, 1.0)
    h = 1e-6
    fd = (disp.dispersion_residual(z + h, p, 1.0)[0] - disp.dispersion_residual(z - h, p, 1.0)[0]) / (2 * h)
    assert abs(dF - fd) <= 1e-5 * max(1.0, abs(dF))


@given(kz=st.floats(0.1, 20), xi=st.floats(-3, 3), alpha=st.floats(-2, 2))
def test_pole_free_form_shares_sign_structure(kz, xi, alpha):
    s = math.sin(kz)
    if abs(s) < 1e-6:
        return
    F, _ = disp.dispersion_residual(kz, EffectiveParams(-1 + 0j, complex(xi), complex(alpha)), 1.0)
    G = disp.pole_free_residual(kz, xi, alpha, 1.0)
    assert G == pytest.approx(0.25 * kz * kz * s * F.real, rel=1e-9, abs=1e-12)


def test_perturbative_seeds():
    p = gaas_p()
    s1 = disp.perturbative_seed(1, p, 1.0)
    assert s1.kz0 == pytest.approx(16 * math.pi / 13)
    assert s1.q0 == pytest.approx(9 * math.pi ** 2 / 338)
    s2 = disp.perturbative_seed(2, p, 1.0)
    assert s2.kz0 == pytest.approx(32 * math.pi / 13)
    assert s2.q0 == pytest.approx(4 * s1.q0)
    s0 = disp.perturbative_seed(3, EffectiveParams(-1 + 0j, 0j), 1.0)
    assert s0 == (3, 3 * math.pi, 0.0)
    with pytest.raises(ValueError):
        disp.perturbative_seed(0, p, 1.0)


def test_in_gap_gaas_root():
    g = disp.in_gap(GAAS_KZ[0], -3 / 13, 1.0)
    assert g.inside
    assert g.half_trace.real == pytest.approx(-1.0433208920796164, rel=1e-12)
    assert g.margin == pytest.approx(0.043, abs=5e-4)


def test_in_gap_silver_root(silver):
    g = disp.in_gap(SILVER_KZ[1], effective_params(silver).xi_r, 1.0)
    assert g.inside and g.half_trace.real == pytest.approx(-5.67, abs=1e-2)


@given(kz=st.floats(0.01, 50))
def test_empty_lattice_never_gapped(kz):
    assert not disp.in_gap(kz, 0.0, 1.0).inside


@given(kz=st.floats(0.5, 15), im=st.floats(-0.3, 0.3), chi=st.floats(-20, -0.6),
       alpha=st.complex_numbers(max_magnitude=0.5))
def test_wave_vector_identity(kz, im, chi, alpha):
    gaas = CavitySpec()
    z = complex(kz, im)
    p = EffectiveParams(complex(chi, 0.01), -0.2 + 0j, alpha)
    kx = disp.transverse_k(p, gaas)
    k = disp.total_k(z, p, gaas)
    assert abs(2 * kx ** 2 + z ** 2 - k ** 2) <= 1e-12 * max(1.0, abs(k) ** 2, abs(z) ** 2)


def test_mpmath_oracle_agrees_with_frozen_roots():
    mp.mp.dps = 30
    for n, kz in enumerate(GAAS_KZ, start=1):
        r = mp.findroot(lambda x: mp.sin(x) - x * mp.cos(x) * 3 / 13,
                        (n * mp.pi + 1e-6, (n + 0.5) * mp.pi), solver="anderson")
        assert float(r) == pytest.approx(kz, rel=1e-15)
