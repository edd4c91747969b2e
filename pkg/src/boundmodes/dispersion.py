"""Thin-layer dispersion relations.

Wave-vector relations in the thin-layer limit::

    k_x = k_y = 2i / (-2 chi - d)
    k^2 = k_z^2 - 8 / (2 chi + d)^2
    exp(i p a) = cos(k_z a) - (k_z alpha / 2) sin(k_z a)

and the closed equation for ``k_z``::

    (2/k_z)^2 [1 + xi k_z cot(k_z a)] = xi^2 - (xi - alpha)^2
"""

from __future__ import annotations

import cmath
import math
from typing import NamedTuple

from .model import CavitySpec, EffectiveParams

POLE_GUARD = 1e-12


class DegenerateError(ArithmeticError):
    """A closed form hits a pole or a degenerate branch point."""


class PoleError(DegenerateError):
    """``k_z a`` too close to a multiple of pi (cotangent pole)."""


class GrowingEnvelopeError(ValueError):
    """``|exp(i p a)| > 1``: the envelope grows away from the centre."""


class DispersionPoint(NamedTuple):
    kz: complex
    k: complex
    kx: complex
    ky: complex
    p: complex


class Seed(NamedTuple):
    n: int
    kz0: float
    q0: float


class GapCheck(NamedTuple):
    inside: bool
    margin: float
    half_trace: complex


def transverse_k(params: EffectiveParams, spec: CavitySpec) -> complex:
    denom = -2.0 * params.chi - spec.d
    if abs(denom) < 1e-14 * max(1.0, spec.d):
        raise DegenerateError("chi = -d/2: k_x diverges")
    return 2j / denom


def total_k(kz: complex, params: EffectiveParams, spec: CavitySpec) -> complex:
    denom = 2.0 * params.chi + spec.d
    if abs(denom) < 1e-14 * max(1.0, spec.d):
        raise DegenerateError("chi = -d/2: k diverges")
    k = cmath.sqrt(kz * kz - 8.0 / denom ** 2)
    if k.real < 0:
        k = -k
    return k


def bloch_factor(kz: complex, alpha: complex, a: float) -> complex:
    """``exp(i p a)`` for a central layer of strength ``alpha``.

    With ``alpha = xi`` this is the half-trace ``cos(p a)`` of the perfect
    lattice instead.
    """
    x = kz * a
    return cmath.cos(x) - 0.5 * kz * alpha * cmath.sin(x)


def quasi_momentum(kz: complex, alpha: complex, a: float) -> complex:
    """Quasi momentum ``p`` with ``Im p >= 0``.

    ``Re(p a)`` is ``arg exp(i p a)`` taken in ``[0, 2 pi)``; it is exactly 0
    or pi for lossless bound states and stays continuous through pi when loss
    tilts ``exp(i p a)`` across the negative real axis.
    """
    e = bloch_factor(kz, alpha, a)
    mag = abs(e)
    if mag < 1e-14:
        raise DegenerateError(f"exp(i p a) = 0 at k_z a = {kz * a}")
    if mag > 1.0 + 1e-12:
        raise GrowingEnvelopeError(f"|exp(i p a)| = {mag:.6g} > 1")
    phase = cmath.phase(e)
    if phase < 0:
        phase += 2 * math.pi
    return complex(phase, -math.log(mag)) / a


def dispersion_residual(kz: complex, params: EffectiveParams, a: float) -> tuple[complex, complex]:
    """Residual ``F(k_z)`` of the closed equation and ``dF/dk_z``."""
    x = kz * a
    s = cmath.sin(x)
    if abs(s) < POLE_GUARD:
        raise PoleError(f"k_z a = {x} is within the cotangent pole guard")
    c = cmath.cos(x)
    xi, alpha = params.xi, params.alpha
    cot = c / s
    F = 4.0 / kz ** 2 + 4.0 * xi * cot / kz - xi ** 2 + (xi - alpha) ** 2
    dF = -8.0 / kz ** 3 + 4.0 * xi * (-a / (kz * s * s) - cot / kz ** 2)
    return F, dF


def residual_scale(params: EffectiveParams, a: float) -> float:
    return max(1.0, abs(params.xi) ** 2 / a ** 2)


def pole_free_residual(kz: float, xi: float, alpha: float, a: float) -> float:
    """``(k_z^2 / 4) sin(k_z a) F(k_z)`` for real parameters.

    Same zeros as the residual, no poles, so sign changes bracket roots.
    """
    x = kz * a
    rhs = 2.0 * alpha * xi - alpha * alpha
    return math.sin(x) * (1.0 - 0.25 * kz * kz * rhs) + xi * kz * math.cos(x)


def perturbative_seed(n: int, params: EffectiveParams, a: float) -> Seed:
    """Lowest-order root and decay in the layer strength."""
    if n < 1:
        raise ValueError("resonance index starts at 1")
    xi = params.xi_r
    return Seed(n, n * math.pi * (a - xi) / a ** 2, (n * math.pi * xi) ** 2 / (2 * a ** 3))


def in_gap(kz: float, xi: float, a: float) -> GapCheck:
    """Whether real ``k_z`` sits in a gap of the perfect thin-layer lattice."""
    ht = bloch_factor(kz, xi, a)
    margin = abs(ht.real) - 1.0
    return GapCheck(margin > 0, margin, ht)


def dispersion_point(kz: complex, params: EffectiveParams, spec: CavitySpec) -> DispersionPoint:
    kx = transverse_k(params, spec)
    return DispersionPoint(kz, total_k(kz, params, spec), kx, kx,
                           quasi_momentum(kz, params.alpha, spec.a))
