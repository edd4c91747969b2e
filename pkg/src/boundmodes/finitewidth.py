"""Finite-width square-potential solutions used as an independent check.

The stacking-axis problem is solved with 2x2 transfer matrices acting on
``(h, h')`` across slabs of width ``b``; the transverse problem is the even
bound state of a square well of width ``d``.  Crossing regions of vertical and
horizontal layers are ignored, so the three 1-d problems stay independent.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rootfind import bisect


class NoBoundStateError(ValueError):
    pass


class EvanescentSlabWarning(RuntimeWarning):
    """Slab interior is evanescent (``1 + W < 0``)."""


@dataclass(frozen=True)
class SlabPotential:
    width: float
    strength: complex
    period: Optional[float] = None

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("slab width must be positive")
        if self.period is not None and not self.width < self.period:
            raise ValueError("slab width must be smaller than the period")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.period is not None:
            s = s - self.period * np.round(s / self.period)
        return np.where(2 * np.abs(s) < self.width, self.strength, 0.0)


def potential_U(x, chi, d):
    """Vertical-layer potential ``chi/d`` inside ``|x| < d/2``."""
    return SlabPotential(d, chi / d)(x)


def potential_W(z, xi, alpha, b, a):
    """Horizontal lattice ``xi/b`` with the central slab replaced by ``alpha/b``."""
    z = np.asarray(z, dtype=float)
    lattice = SlabPotential(b, xi / b, period=a)(z)
    return lattice + SlabPotential(b, (alpha - xi) / b)(z)


def _propagator(kappa: complex, length: float) -> np.ndarray:
    """Map ``(h, h')`` across ``length`` for ``h'' = -kappa^2 h``."""
    x = kappa * length
    c = cmath.cos(x)
    # sin(x)/kappa, regular at kappa = 0
    s = length * (cmath.sin(x) / x if abs(x) > 1e-8 else 1.0 - x * x / 6.0)
    return np.array([[c, s], [-kappa * kappa * s, c]], dtype=complex)


def slab_wavenumber(kz: complex, strength: complex) -> complex:
    return kz * cmath.sqrt(1.0 + strength)


def unit_cell_transfer(kz: complex, xi: complex, b: float, a: float, warn: bool = True) -> np.ndarray:
    """Transfer matrix over one period: background of width ``a-b`` then a slab.

    The cell starts at the upper face of a slab, so its eigenvectors are the
    Bloch waves just outside a layer.
    """
    strength = xi / b
    if warn and (1.0 + strength).real < 0:
        warnings.warn("slab interior is evanescent", EvanescentSlabWarning, stacklevel=2)
    kin = slab_wavenumber(kz, strength)
    return _propagator(kin, b) @ _propagator(kz, a - b)


def half_trace(kz, xi, b, a):
    """``cos(p a)`` of the finite-width lattice; vectorized over real ``kz``."""
    kz = np.asarray(kz, dtype=float)
    kin = kz * np.sqrt(complex(1.0 + xi / b))
    L = a - b
    x = kin * b
    with np.errstate(invalid="ignore", divide="ignore"):
        sin_over = np.where(np.abs(x) > 1e-8, np.sin(x) / np.where(x == 0, 1, x), 1.0)
        s_out = np.where(kz * L != 0, np.sin(kz * L) / np.where(kz == 0, 1, kz), L)
    s_in = b * sin_over
    # (1/2) tr[P_in P_out]
    ht = np.cos(x) * np.cos(kz * L) - 0.5 * (kin ** 2 * s_in * s_out + kz ** 2 * s_out * s_in)
    return ht


@dataclass
class BandStructure:
    kz_grid: np.ndarray
    half_trace: np.ndarray
    gaps: list = field(default_factory=list)


def _refine_grid(f, lo, hi, points, max_change=0.1, cap=2.0, max_points=200_000):
    """Sample ``f`` on ``[lo, hi]`` until the clipped value changes by < max_change."""
    grid = np.linspace(lo, hi, max(points, 2))
    vals = np.clip(f(grid).real, -cap, cap)
    while len(grid) < max_points:
        jumps = np.abs(np.diff(vals)) >= max_change
        if not jumps.any():
            break
        mids = 0.5 * (grid[:-1][jumps] + grid[1:][jumps])
        grid = np.concatenate([grid, mids])
        order = np.argsort(grid, kind="stable")
        grid = grid[order]
        vals = np.clip(f(grid).real, -cap, cap)
    return grid


def band_structure(kz_range, xi, b, a, points: int = 512, edge_tol: float = 1e-10) -> BandStructure:
    """Half-trace of the perfect lattice on a real ``k_z`` grid with gap intervals.

    The grid is refined wherever ``cos(p a)`` (clipped to [-2, 2], since only
    the crossing of +-1 matters) jumps by 0.1 or more between samples.  Gap
    edges are bisected on ``|cos(p a)| - 1``.
    """
    lo, hi = kz_range
    f = lambda k: half_trace(k, xi, b, a)
    grid = _refine_grid(f, lo, hi, points)
    ht = f(grid).real
    outside = np.abs(ht) > 1.0
    gaps = []
    edge_fn = lambda k: abs(float(f(np.array([k]))[0].real)) - 1.0
    i = 0
    n = len(grid)
    while i < n:
        if not outside[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and outside[j + 1]:
            j += 1
        k_lo = grid[i] if i == 0 else bisect(edge_fn, (grid[i - 1], grid[i]), tol=edge_tol * 1e-2)
        k_hi = grid[j] if j == n - 1 else bisect(edge_fn, (grid[j], grid[j + 1]), tol=edge_tol * 1e-2)
        gaps.append((float(k_lo), float(k_hi)))
        i = j + 1
    return BandStructure(grid, ht, gaps)


@dataclass(frozen=True)
class DefectMode:
    kz: float
    q: float
    eigenvalue: complex
    gap: tuple


def _decaying_eigen(M):
    A, B, C, D = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    ht = 0.5 * (A + D)
    root = cmath.sqrt(ht * ht - 1.0)
    lam1, lam2 = ht + root, ht - root
    lam = lam1 if abs(lam1) < abs(lam2) else lam2
    return lam, (B, lam - A)


def matching_determinant(kz: float, xi: float, alpha: float, b: float, a: float) -> float:
    """Wronskian of the even central solution and the decaying Bloch wave at z=b/2.

    Zero exactly at a defect state; only meaningful inside a gap.
    """
    M = unit_cell_transfer(kz, xi, b, a, warn=False)
    lam, (v0, v1) = _decaying_eigen(M)
    k0 = slab_wavenumber(kz, alpha / b)
    h = cmath.cos(k0 * b / 2)
    dh = -k0 * cmath.sin(k0 * b / 2)
    return (dh * v0 - h * v1).real


def central_vector(kz: float, alpha: float, b: float) -> np.ndarray:
    """``(h, h')`` at ``z = b/2`` of the even solution of the central slab."""
    k0 = slab_wavenumber(kz, alpha / b)
    return np.array([cmath.cos(k0 * b / 2), -k0 * cmath.sin(k0 * b / 2)], dtype=complex)


def defect_modes(xi: float, alpha: float, b: float, a: float, kz_max: float,
                 points_per_gap: int = 400) -> list[DefectMode]:
    """All lossless defect states with ``k_z < kz_max``, ascending."""
    bands = band_structure((1e-6 / a, kz_max), xi, b, a)
    out = []
    for glo, ghi in bands.gaps:
        width = ghi - glo
        shrink = 1e-9 * width
        xs = np.linspace(glo + shrink, ghi - shrink, points_per_gap)
        vals = [matching_determinant(x, xi, alpha, b, a) for x in xs]
        for x0, x1, v0, v1 in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
            if v0 == 0 or (v0 > 0) != (v1 > 0):
                g = lambda k: matching_determinant(k, xi, alpha, b, a)
                try:
                    kz = bisect(g, (x0, x1), tol=1e-14)
                except ValueError:
                    continue
                M = unit_cell_transfer(kz, xi, b, a, warn=False)
                lam, _ = _decaying_eigen(M)
                out.append(DefectMode(kz, -math.log(abs(lam)) / a, lam, (glo, ghi)))
    return out


def defect_mode(n_guess: int, xi: float, alpha: float, b: float, a: float) -> DefectMode:
    """The ``n_guess``-th defect state (ascending ``k_z``) of the finite-width stack."""
    if n_guess < 1:
        raise ValueError("defect index starts at 1")
    kz_max = (n_guess + 2) * math.pi / a
    for _ in range(6):
        found = defect_modes(xi, alpha, b, a, kz_max)
        if len(found) >= n_guess:
            return found[n_guess - 1]
        kz_max *= 2
    raise NoBoundStateError(f"only {len(found)} defect states below k_z a = {kz_max * a:.4g}")


def well_mode_x(chi: float, d: float, prefactor: Optional[float] = None) -> complex:
    """Even bound state of the transverse square well; returns ``k_x = i|k_x|``.

    With an explicit ``prefactor = k^2 - k_z^2 (< 0)`` the well depth is fixed.
    Without it the depth is made self-consistent with ``k^2 - k_z^2 =
    k_x^2 + k_y^2 = -2|k_x|^2``, which reduces to
    ``sqrt(s) tan(|k_x| d sqrt(s) / 2) = 1`` with ``s = (-2 chi - d)/d``.
    """
    if prefactor is None:
        s = (-2.0 * chi - d) / d
        if s <= 0:
            raise NoBoundStateError("chi/d >= -1/2: no transversely bound state")
        rs = math.sqrt(s)
        g = lambda kap: rs * math.tan(0.5 * kap * d * rs) - 1.0
        upper = math.pi / (d * rs) * (1 - 1e-12)
        kap = bisect(g, (0.0, upper), tol=1e-15)
        return 1j * kap
    if prefactor >= 0:
        raise NoBoundStateError("a low-index well binds only for k^2 - k_z^2 < 0")
    depth = prefactor * chi / d  # -f'' = (kx^2 + depth) f inside
    if depth <= 0:
        raise NoBoundStateError("well is repulsive for this prefactor")
    # u = q d/2, w = |kx| d/2, u^2 + w^2 = depth (d/2)^2, w = u tan u on the first branch
    R = 0.5 * d * math.sqrt(depth)
    g = lambda u: u * math.tan(u) - math.sqrt(max(R * R - u * u, 0.0))
    u = bisect(g, (0.0, min(R, math.pi / 2 * (1 - 1e-12))), tol=1e-15)
    return 1j * (2.0 / d) * u * math.tan(u)
