"""Linewidths, spontaneous-emission spectra, beta factors and threshold gain.

All rates are ratios to the background rate; lineshapes use the lossless
bound-state wave number ``k_n`` as the centre and the first-order width
``gamma_n``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .modes import ModeSolution, central_intensity_R
from .model import CavitySpec, EffectiveParams


class NotBoundError(ValueError):
    """Mode violates ``k_z^2 > k^2``; the first-order width is undefined."""


def background_rate(k, eps1: float):
    """Emission rate in the background medium with hbar = mu = 1."""
    return 12.0 * np.asarray(k) ** 3 * eps1 ** 2.5 / (2.0 + eps1) ** 2


def _denominator(kz: float, xi: float, a: float) -> float:
    return xi + a + kz * kz * xi * xi * a


def linewidth(mode: ModeSolution, params: EffectiveParams, spec: CavitySpec,
              alpha: complex = 0j):
    """First-order width of resonance ``mode.n`` around its passive bound state.

    ``params`` supplies the real parts (chi_r, xi_r) and the small absorptive
    parts (eta, zeta).  ``alpha`` is the gain of the central layer; it is zero
    for the passive cavity, and a complex value gives a complex width.
    """
    kz, k = mode.kz.real, mode.k.real
    a = spec.a
    transverse = kz * kz - k * k
    if transverse <= 0:
        raise NotBoundError(f"k_z^2 - k^2 = {transverse:.6g} <= 0 for mode {mode.n}")
    xi = params.xi_r
    absorb = transverse ** 1.5 * params.eta / (k * math.sqrt(2.0))
    layered = (kz * kz * params.zeta - 0.5j * kz ** 4 * xi * xi * alpha) / (
        _denominator(kz, xi, a) * k)
    gamma = absorb + layered
    if alpha == 0:
        return float(gamma.real)
    return complex(gamma)


def lorentzian_rate(k, mode: ModeSolution, R_n: float, gamma_n: float, Gamma=1.0):
    """Partial rate into resonance ``n``; ``Gamma`` defaults to ratio units."""
    k = np.asarray(k, dtype=float)
    kn = mode.k.real
    if gamma_n == 0:
        if np.any(k == kn):
            raise ZeroDivisionError("zero width at resonance: unbounded peak (delta line)")
        return np.zeros_like(k)
    return (6.0 * math.pi * np.asarray(Gamma) / R_n) * gamma_n / ((k - kn) ** 2 + gamma_n ** 2)


def delta_weight(R_n: float) -> float:
    """Integrated weight (in k) of a zero-width resonance line, in units of Gamma."""
    return 6.0 * math.pi ** 2 / R_n


def beta_factor(gamma_n_values, gamma_prop):
    """Fraction of emission into the resonances; 0/0 gives 0.

    Returns ``(beta, undefined_mask)``.
    """
    num = np.asarray(gamma_n_values, dtype=float)
    if num.ndim > np.ndim(gamma_prop):
        num = num.sum(axis=0)
    den = num + np.asarray(gamma_prop, dtype=float)
    zero = den == 0
    beta = np.divide(num, np.where(zero, 1.0, den))
    beta = np.where(zero, 0.0, beta)
    if beta.ndim == 0:
        return float(beta), bool(zero)
    return beta, zero


@dataclass(frozen=True)
class GammaPropModel:
    """Rate into propagating modes, relative to the background rate.

    ``kind`` is ``background`` (ratio 1), ``constant`` or ``table``.
    """

    kind: str = "background"
    value: float = 1.0
    table_k: tuple = ()
    table_ratio: tuple = ()

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind == "background":
            return np.ones_like(k)
        if self.kind == "constant":
            return np.full_like(k, self.value)
        return np.interp(k, self.table_k, self.table_ratio)

    @property
    def label(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.value!r}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "GammaPropModel":
        if text == "background":
            return cls()
        if text.startswith("constant:"):
            value = float(text.split(":", 1)[1])
            if value < 0:
                raise ValueError("Gamma_prop must be non-negative")
            return cls("constant", value)
        if text.startswith("table:"):
            return cls.from_table(text.split(":", 1)[1])
        raise ValueError(f"unknown Gamma_prop model {text!r}")

    @classmethod
    def from_table(cls, path: str) -> "GammaPropModel":
        """Two-column text table ``k*a, Gamma_prop/Gamma``; '#' comments allowed."""
        with open(path) as fh:
            text = fh.read().replace(",", " ")
        data = np.loadtxt(io.StringIO(text), comments="#", ndmin=2)
        order = np.argsort(data[:, 0], kind="stable")
        data = data[order]
        if np.any(data[:, 1] < 0):
            raise ValueError("Gamma_prop table has negative entries")
        return cls("table", table_k=tuple(data[:, 0]), table_ratio=tuple(data[:, 1]))


@dataclass(frozen=True)
class Resonance:
    mode: ModeSolution
    R: float
    gamma: float

    @property
    def peak_ratio(self) -> float:
        """Gamma_n(k_n)/Gamma; infinite for a true bound state."""
        if self.gamma == 0:
            return math.inf
        return 6.0 * math.pi / (self.R * self.gamma)


def resonances(modes: Sequence[ModeSolution], params: EffectiveParams,
               spec: CavitySpec) -> list[Resonance]:
    return [Resonance(m, central_intensity_R(m, params, spec), linewidth(m, params, spec))
            for m in modes]


def peak_beta(res: Resonance, gamma_prop: GammaPropModel) -> float:
    """beta_n at the top of its own peak."""
    peak = res.peak_ratio
    if math.isinf(peak):
        return 1.0
    b, _ = beta_factor(peak, float(gamma_prop(res.mode.k.real)))
    return b


@dataclass
class EmissionSpectrum:
    k_grid: np.ndarray
    gamma_n: list
    Gamma_n_over_Gamma: list
    Gamma_prop_over_Gamma: np.ndarray
    beta: np.ndarray
    gamma_prop_model: str = "background"
    deltas: list = field(default_factory=list)  # (n, k_n, weight) for zero-width lines


def spectrum(k_grid, res: Sequence[Resonance], gamma_prop: GammaPropModel) -> EmissionSpectrum:
    k_grid = np.asarray(k_grid, dtype=float)
    rates, deltas = [], []
    for r in res:
        if r.gamma == 0:
            rates.append(np.zeros_like(k_grid))
            deltas.append((r.mode.n, r.mode.k.real, delta_weight(r.R)))
        else:
            rates.append(lorentzian_rate(k_grid, r.mode, r.R, r.gamma))
    prop = gamma_prop(k_grid)
    total = np.sum(rates, axis=0) if rates else np.zeros_like(k_grid)
    beta, _ = beta_factor(total, prop)
    return EmissionSpectrum(k_grid, [r.gamma for r in res], rates, prop, np.asarray(beta),
                            gamma_prop.label, deltas)


@dataclass(frozen=True)
class ThresholdResult:
    alpha_threshold: complex
    n: int
    beta_used: float


def threshold_gain(mode: ModeSolution, params: EffectiveParams, spec: CavitySpec,
                   beta_n: float = 1.0) -> ThresholdResult:
    """Central-layer gain that cancels the first-order width, divided by beta_n."""
    if not 0 < beta_n <= 1:
        raise ValueError(f"beta_n must lie in (0, 1], got {beta_n}")
    kz, k = mode.kz.real, mode.k.real
    a = spec.a
    transverse = kz * kz - k * k
    if transverse <= 0:
        raise NotBoundError(f"k_z^2 - k^2 = {transverse:.6g} <= 0 for mode {mode.n}")
    xi = params.xi_r
    bracket = (params.zeta / (kz * kz * xi * xi)
               + transverse ** 1.5 * params.eta / math.sqrt(2.0)
               * _denominator(kz, xi, a) / (kz ** 4 * xi * xi))
    return ThresholdResult(-2j * bracket / beta_n, mode.n, beta_n)
