"""Root finding for the dispersion equation.

Lossless roots are bracketed on a pole-free form of the residual and bisected;
complex resonances are reached from them by Newton continuation in the loss
and gain parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from . import dispersion as disp
from .model import CavitySpec, EffectiveParams

RESIDUAL_TOL = 1e-12
MAX_NEWTON = 50
CONTINUATION_STEPS = 8


class RootFindError(RuntimeError):
    pass


class NoSignChangeError(RootFindError):
    pass


class PathJumpError(RootFindError):
    """Continuation stepped too far relative to neighbouring roots."""

    def __init__(self, message, path):
        super().__init__(message)
        self.path = path


@dataclass
class SolveReport:
    root: complex
    iterations: int
    residual_norm: float
    converged: bool
    path: list = field(default_factory=list)
    history: list = field(default_factory=list)
    message: str = ""


def bisect(f: Callable[[float], float], bracket: tuple[float, float], tol: float = 1e-12,
           poles: Iterable[float] = (), max_iter: int = 200) -> float:
    """Plain bisection; returns the midpoint once the bracket is below ``tol``."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo > hi:
        lo, hi = hi, lo
    for pole in poles:
        if lo <= pole <= hi:
            raise disp.PoleError(f"pole at {pole} inside bracket [{lo}, {hi}]")
    flo, fhi = f(lo), f(hi)
    end_scale = max(abs(flo), abs(fhi))
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NoSignChangeError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    # a sign flip through a pole leaves |f| large where a true root leaves it small
    if abs(f(root)) > end_scale:
        raise disp.PoleError(f"sign change on [{lo}, {hi}] is a pole, not a root")
    return root


def newton_complex(f_and_df: Callable[[complex], tuple[complex, complex]], z0: complex,
                   tol: float = RESIDUAL_TOL, max_iter: int = MAX_NEWTON,
                   deflate: Sequence[complex] = ()) -> SolveReport:
    """Newton iteration in the complex plane.

    ``deflate`` lists known roots divided out of ``f`` so the iteration cannot
    fall back onto them.  The convergence test is always on the undeflated
    residual.
    """
    z = complex(z0)
    history = []
    for it in range(max_iter + 1):
        try:
            f, df = f_and_df(z)
        except OverflowError:
            return SolveReport(z, it, float("inf"), False, history=history,
                               message="iteration diverged")
        history.append(abs(f))
        if abs(f) < tol:
            return SolveReport(z, it, abs(f), True, history=history)
        if it == max_iter:
            break
        if deflate:
            prod = 1.0 + 0j
            corr = 0j
            for r in deflate:
                prod *= z - r
                corr += 1.0 / (z - r)
            g = f / prod
            dg = df / prod - g * corr
        else:
            g, dg = f, df
        if abs(dg) < 1e-300 or not math.isfinite(abs(dg)):
            return SolveReport(z, it, abs(f), False, history=history,
                               message="derivative underflow")
        step = g / dg
        z = z - step
        if not math.isfinite(abs(z)):
            return SolveReport(z, it, float("inf"), False, history=history,
                               message="iteration diverged")
    return SolveReport(z, max_iter, history[-1], False, history=history,
                       message=f"no convergence in {max_iter} iterations")


def _residual_fn(params: EffectiveParams, a: float):
    return lambda kz: disp.dispersion_residual(kz, params, a)


def polish(kz0: complex, params: EffectiveParams, a: float, deflate: Sequence[complex] = (),
           max_iter: int = MAX_NEWTON) -> SolveReport:
    tol = RESIDUAL_TOL * disp.residual_scale(params, a)
    return newton_complex(_residual_fn(params, a), kz0, tol=tol, max_iter=max_iter,
                          deflate=deflate)


@dataclass(frozen=True)
class LosslessRoot:
    n: int
    kz: float
    seed: disp.Seed
    seed_mode: str  # "perturbative" or "scan"


def _is_bound(kz: float, params: EffectiveParams, spec: CavitySpec) -> bool:
    if -2.0 * params.chi_r - spec.d <= 0:
        return False
    k2 = kz * kz - 8.0 / (2.0 * params.chi_r + spec.d) ** 2
    if k2 <= 0:
        return False
    e = disp.bloch_factor(kz, params.alpha.real, spec.a)
    return 1e-14 < abs(e) < 1.0


def scan_lossless(params: EffectiveParams, spec: CavitySpec, count: int,
                  samples_per_pi: int = 64, max_branches: int = 400) -> list[float]:
    """First ``count`` real bound-state roots in ascending order."""
    a = spec.a
    xi, alpha = params.xi_r, params.alpha.real
    g = lambda x: disp.pole_free_residual(x, xi, alpha, a)
    roots = []
    step = math.pi / a / samples_per_pi
    lo = 1e-9 / a
    glo = g(lo)
    i = 1
    while len(roots) < count and i <= samples_per_pi * max_branches:
        hi = i * step
        ghi = g(hi)
        if glo == 0 or (glo > 0) != (ghi > 0):
            kz = bisect(g, (lo, hi), tol=1e-15 / a)
            if _is_bound(kz, params, spec):
                roots.append(kz)
        lo, glo = hi, ghi
        i += 1
    return roots


def lossless_roots(params: EffectiveParams, spec: CavitySpec, n_max: int) -> list[LosslessRoot]:
    """Bound states 1..n_max of the passive skeleton of ``params``.

    Roots are labelled by ascending ``k_z``.  The perturbative seed for index
    ``n`` is accepted as the label source when it lies closer to the ``n``-th
    root than to any other; otherwise the labels come from the scan alone.
    """
    if n_max <= 0:
        return []
    passive = params.real_part()
    scanned = scan_lossless(passive, spec, n_max + 1)
    out = []
    for n, kz in enumerate(scanned[:n_max], start=1):
        seed = disp.perturbative_seed(n, passive, spec.a)
        nearest = min(range(len(scanned)), key=lambda j: abs(scanned[j] - seed.kz0))
        mode = "perturbative" if nearest == n - 1 else "scan"
        res = polish(complex(kz), passive, spec.a)
        kz_final = res.root.real if res.converged else kz
        out.append(LosslessRoot(n, kz_final, seed, mode))
    return out


def continue_in_loss(n: int, params_target: EffectiveParams, spec: CavitySpec,
                     steps: int = CONTINUATION_STEPS,
                     start: Optional[LosslessRoot] = None) -> SolveReport:
    """Carry bound state ``n`` from the passive cavity to ``params_target``.

    Loss and gain are switched on as ``t = 2**-(steps-1), ..., 1/2, 1``; each
    waypoint is Newton-polished from the previous one.
    """
    roots = lossless_roots(params_target, spec, n + 1)
    if len(roots) < n:
        raise RootFindError(f"no lossless bound state with index {n}")
    base = start if start is not None else roots[n - 1]
    others = [r.kz for r in roots if r.n != n]
    kz = complex(base.kz)
    passive = params_target.real_part()
    first = polish(kz, passive, spec.a)
    path = [(0.0, first.root)]
    if params_target.lossless:
        first.path = path
        return first
    ts = [2.0 ** (j - steps) for j in range(1, steps + 1)]
    report = first
    total_iter = first.iterations
    for t in ts:
        report = polish(kz, params_target.scaled_loss(t), spec.a)
        total_iter += report.iterations
        if not report.converged:
            report.path = path
            report.message = f"Newton failed at t={t:g}: {report.message}"
            return report
        if others:
            gap = min(abs(kz - o) for o in others)
            if abs(report.root - kz) > 0.5 * gap:
                path.append((t, report.root))
                raise PathJumpError(
                    f"root {n} moved {abs(report.root - kz):.3g} at t={t:g}, more than half "
                    f"the distance {gap:.3g} to the nearest other root", path)
        kz = report.root
        path.append((t, kz))
    report.path = path
    report.iterations = total_iter
    margin = disp.in_gap(kz.real, params_target.xi_r, spec.a).margin
    if margin < 0:
        report.message = "band-edge-degenerate resonance"
    return report
