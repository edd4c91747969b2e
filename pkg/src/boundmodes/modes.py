"""Bound-mode solutions, field profiles and the separable vector field."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import dispersion as disp
from . import rootfind
from .model import CavitySpec, EffectiveParams


@dataclass(frozen=True)
class ModeSolution:
    n: int
    kz: complex
    k: complex
    kx: complex
    ky: complex
    p: complex
    q: float
    bloch: complex  # exp(i p a), kept exactly rather than via exp(log(...))
    a: float = 1.0
    gamma: float = 0.0
    residual: float = 0.0
    seed_mode: str = "perturbative"
    converged: bool = True
    band_edge: bool = False

    @property
    def bound(self) -> bool:
        return abs(self.k.imag) < 1e-12 and abs(self.kz.imag) < 1e-12


@dataclass(frozen=True)
class FieldSample:
    position: tuple
    E: tuple
    cusp: bool = False


def mode_from_kz(n: int, kz: complex, params: EffectiveParams, spec: CavitySpec,
                 **extra) -> ModeSolution:
    pt = disp.dispersion_point(kz, params, spec)
    F, _ = disp.dispersion_residual(kz, params, spec.a)
    return ModeSolution(
        n=n, kz=pt.kz, k=pt.k, kx=pt.kx, ky=pt.ky, p=pt.p, q=pt.p.imag,
        bloch=disp.bloch_factor(kz, params.alpha, spec.a), a=spec.a,
        residual=abs(F), **extra,
    )


def solve_modes(params: EffectiveParams, spec: CavitySpec, n_max: int,
                steps: int = rootfind.CONTINUATION_STEPS) -> list[ModeSolution]:
    """Resonances 1..n_max for ``params``; lossless input gives bound states.

    Each lossy resonance is continued from its passive bound state.  Failed
    continuations are returned with ``converged=False`` rather than raised.
    """
    out = []
    for root in rootfind.lossless_roots(params, spec, n_max):
        if params.lossless:
            out.append(mode_from_kz(root.n, complex(root.kz), params, spec,
                                    seed_mode=root.seed_mode))
            continue
        try:
            rep = rootfind.continue_in_loss(root.n, params, spec, steps=steps, start=root)
        except rootfind.PathJumpError:
            rep = None
        if rep is None or not rep.converged:
            kz = rep.root if rep is not None else complex(root.kz)
            out.append(_failed_mode(root.n, kz, spec, root.seed_mode))
            continue
        try:
            out.append(mode_from_kz(root.n, rep.root, params, spec, seed_mode=root.seed_mode,
                                    band_edge=rep.message.startswith("band-edge")))
        except (disp.GrowingEnvelopeError, disp.DegenerateError):
            out.append(_failed_mode(root.n, rep.root, spec, root.seed_mode))
    return out


def _failed_mode(n, kz, spec, seed_mode):
    nan = complex(math.nan, math.nan)
    return ModeSolution(n=n, kz=kz, k=nan, kx=nan, ky=nan, p=nan, q=math.nan, bloch=nan,
                        a=spec.a, residual=math.nan, seed_mode=seed_mode, converged=False)


def profile_f(x, mode: ModeSolution):
    return np.exp(1j * mode.kx * np.abs(x))


def profile_g(y, mode: ModeSolution):
    return np.exp(1j * mode.ky * np.abs(y))


def _layer_index(z, a):
    return np.floor(np.abs(z) / a).astype(int)


def profile_h(z, mode: ModeSolution):
    """Even Bloch profile along the stacking axis, exact between layers."""
    z = np.asarray(z, dtype=float)
    a = mode.a
    l = _layer_index(z, a)
    az = np.abs(z)
    e_l = np.power(mode.bloch, l)
    kz = mode.kz
    return mode.bloch * e_l * np.sin(kz * (az - l * a)) + e_l * np.sin(kz * (l * a + a - az))


def _dh_one_sided(az, l, mode):
    a, kz = mode.a, mode.kz
    e_l = np.power(mode.bloch, l)
    return kz * (mode.bloch * e_l * np.cos(kz * (az - l * a)) - e_l * np.cos(kz * (l * a + a - az)))


def dprofile_h(z, mode: ModeSolution):
    """dh/dz; at a layer plane the mean of the two one-sided slopes."""
    z = np.asarray(z, dtype=float)
    a = mode.a
    az = np.abs(z)
    l = _layer_index(z, a)
    right = _dh_one_sided(az, l, mode)
    left = _dh_one_sided(az, np.maximum(l - 1, 0), mode)
    on_plane = (az == l * a) & (l > 0)
    # sign(0) = 0 gives the symmetric mean on the central plane
    return np.sign(z) * np.where(on_plane, 0.5 * (left + right), right)


def _df(x, kx):
    return 1j * kx * np.sign(x) * np.exp(1j * kx * np.abs(x))


def field_E(position, mode: ModeSolution) -> FieldSample:
    """Electric field of the separable mode at a point outside the layers.

    ``E = (kz^2/k^2) grad(fgh) - z_hat d/dz(fgh)``.  On the planes x=0, y=0
    or z = l*a the slope of the profile has a cusp; the symmetric mean is
    used there and ``cusp`` is set.
    """
    x, y, z = (float(c) for c in position)
    f, g, h = profile_f(x, mode), profile_g(y, mode), complex(profile_h(z, mode))
    fp, gp = _df(x, mode.kx), _df(y, mode.ky)
    hp = complex(dprofile_h(z, mode))
    ratio = mode.kz ** 2 / mode.k ** 2
    ex = ratio * fp * g * h
    ey = ratio * f * gp * h
    ez = (ratio - 1.0) * f * g * hp
    a = mode.a
    cusp = x == 0.0 or y == 0.0 or math.isclose(abs(z) / a, round(abs(z) / a), abs_tol=1e-15)
    return FieldSample((x, y, z), (complex(ex), complex(ey), complex(ez)), cusp)


def central_intensity_R(mode: ModeSolution, params: EffectiveParams, spec: CavitySpec) -> float:
    """Normalized bound-state intensity at the origin (closed form).

    Evaluated on the real parts of ``kz``, ``k``, ``chi`` and ``xi``.
    """
    kz, k = mode.kz.real, mode.k.real
    a, d = spec.a, spec.d
    chi, xi = params.chi_r, params.xi_r
    R = (1.0 / xi + kz ** 2 * a / math.sin(kz * a) ** 2) * (4 * chi ** 2 - d ** 2) * (k / kz) ** 4
    if not R > 0:
        raise ValueError(f"non-positive central intensity R = {R:.6g}: not a physical bound state")
    return R


def leakage_exponent(N: float, kx_abs: float, q: float, d: float, a: float) -> float:
    return -2.0 * N * kx_abs * d - N * q * a


def leakage_fraction(N: int, mode: ModeSolution, spec: CavitySpec) -> float:
    """Rough fraction of mode volume outside an ``Nd x Nd x Na`` box."""
    if not (mode.q > 0 and mode.kx.imag > 0):
        raise ValueError("leakage estimate needs a mode decaying in all directions")
    return math.exp(leakage_exponent(N, abs(mode.kx), mode.q, spec.d, spec.a))


FIELD_HEADER = ["x", "y", "z", "Re(Ex)", "Im(Ex)", "Re(Ey)", "Im(Ey)", "Re(Ez)", "Im(Ez)"]


def field_grid(mode: ModeSolution, xs, ys, zs) -> list[FieldSample]:
    """Samples on a Cartesian grid, x slowest and z fastest."""
    return [field_E((x, y, z), mode) for x in xs for y in ys for z in zs]


def with_gamma(mode: ModeSolution, gamma: float) -> ModeSolution:
    return replace(mode, gamma=gamma)
