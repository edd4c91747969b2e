"""Cavity geometry, material constants and effective 2-d susceptibilities.

All lengths are measured in units of the layer period ``a``; a cavity given
in physical units is normalized with :meth:`CavitySpec.normalized` before any
solver sees it.  Wave vectors are therefore reported as ``k * a`` and rates as
ratios to the background emission rate, so the dipole moment and hbar never
appear in exported numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional


class ConfigError(ValueError):
    """Invalid cavity description or configuration file."""


@dataclass(frozen=True)
class UnitSystem:
    """Length unit is the period ``a``; rate unit is the background rate."""

    length_unit: str = "a"
    rate_unit: str = "Gamma_background"

    @staticmethod
    def omega(k: complex, eps1: float, c: float = 1.0) -> complex:
        """Angular frequency belonging to wave number ``k`` in the background."""
        return c * k / eps1 ** 0.5


@dataclass(frozen=True)
class CavitySpec:
    a: float = 1.0
    b: float = 0.25
    d: float = 1.0
    eps1: float = 13.0
    eps2: complex = 1.0
    eps3: Optional[complex] = None
    N: Optional[int] = None

    def __post_init__(self):
        if not self.eps1 > 0:
            raise ConfigError(f"eps1 must be positive, got {self.eps1}")
        if not self.a > 0:
            raise ConfigError(f"period a must be positive, got {self.a}")
        if not 0 < self.b < self.a:
            raise ConfigError(f"need 0 < b < a, got b={self.b}, a={self.a}")
        if not self.d > 0:
            raise ConfigError(f"d must be positive, got {self.d}")
        if self.N is not None and self.N < 0:
            raise ConfigError(f"cell count N must be non-negative, got {self.N}")
        object.__setattr__(self, "eps2", complex(self.eps2))
        eps3 = self.eps1 if self.eps3 is None else self.eps3
        object.__setattr__(self, "eps3", complex(eps3))

    def normalized(self) -> "CavitySpec":
        """Same cavity with all lengths divided by ``a``."""
        s = self.a
        return replace(self, a=1.0, b=self.b / s, d=self.d / s)

    def with_eps2(self, eps2: complex) -> "CavitySpec":
        return replace(self, eps2=complex(eps2))


@dataclass(frozen=True)
class EffectiveParams:
    """Complex effective susceptibilities (lengths)."""

    chi: complex
    xi: complex
    alpha: complex = 0j

    @property
    def chi_r(self) -> float:
        return self.chi.real

    @property
    def eta(self) -> float:
        return self.chi.imag

    @property
    def xi_r(self) -> float:
        return self.xi.real

    @property
    def zeta(self) -> float:
        return self.xi.imag

    @property
    def lossless(self) -> bool:
        return self.chi.imag == 0 and self.xi.imag == 0 and self.alpha.imag == 0

    def real_part(self) -> "EffectiveParams":
        """Passive skeleton: loss and gain removed."""
        return EffectiveParams(complex(self.chi.real), complex(self.xi.real),
                               complex(self.alpha.real))

    def scaled_loss(self, t: float) -> "EffectiveParams":
        """Imaginary parts (eta, zeta, Im alpha) multiplied by ``t``."""
        return EffectiveParams(
            complex(self.chi.real, t * self.chi.imag),
            complex(self.xi.real, t * self.xi.imag),
            complex(self.alpha.real, t * self.alpha.imag),
        )


def effective_params(spec: CavitySpec, loss_fraction: Optional[float] = None) -> EffectiveParams:
    """Map materials and geometry onto ``chi``, ``xi`` and ``alpha``.

    When ``loss_fraction`` is given the absorptive parts are overridden with
    ``eta = f*|chi_r|`` and ``zeta = f*|xi_r|``, which keeps ``Im chi >= 0``
    for low-index layers; the imaginary part of ``alpha`` (gain) is kept.
    """
    if not spec.eps1 > 0:
        raise ConfigError("eps1 must be positive")
    if not (spec.a > 0 and spec.b > 0 and spec.d > 0):
        raise ConfigError("geometry must be positive")
    contrast = (spec.eps2 - spec.eps1) / spec.eps1
    chi = contrast * spec.d
    xi = contrast * spec.b
    alpha = (spec.eps3 - spec.eps1) * spec.b / spec.eps1
    if loss_fraction is not None:
        if loss_fraction < 0:
            raise ConfigError(f"loss_fraction must be >= 0, got {loss_fraction}")
        chi = complex(chi.real, loss_fraction * abs(chi.real))
        xi = complex(xi.real, loss_fraction * abs(xi.real))
    return EffectiveParams(complex(chi), complex(xi), complex(alpha))


def eps_from_params(params: EffectiveParams, spec: CavitySpec) -> tuple[complex, complex, complex]:
    """Inverse of :func:`effective_params`: returns ``(eps2 via chi, eps2 via xi, eps3)``."""
    e1 = spec.eps1
    return (e1 + e1 * params.chi / spec.d,
            e1 + e1 * params.xi / spec.b,
            e1 + e1 * params.alpha / spec.b)


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    U: float
    binding_margin: float
    degenerate: bool
    gaps_possible: bool
    reasons: tuple = field(default_factory=tuple)


def bound_mode_feasible(params: EffectiveParams, spec: CavitySpec) -> Feasibility:
    """Check the transverse binding criterion ``chi/d < -1/2``.

    ``binding_margin`` is ``-2*chi_r - d``; it must be positive for an
    evanescent ``k_x``, and it vanishes where ``k_x`` diverges.
    """
    U = params.chi_r / spec.d
    margin = -2.0 * params.chi_r - spec.d
    degenerate = abs(margin) <= 1e-14 * max(1.0, spec.d)
    reasons = []
    if degenerate:
        reasons.append("chi = -d/2: transverse wave vector diverges")
    elif margin < 0:
        reasons.append(f"U = chi/d = {U:.6g} is not below -1/2")
    gaps = params.xi_r != 0
    if not gaps:
        reasons.append("xi = 0: horizontal lattice opens no gaps")
    return Feasibility(
        feasible=(margin > 0 and not degenerate and gaps),
        U=U,
        binding_margin=margin,
        degenerate=degenerate,
        gaps_possible=gaps,
        reasons=tuple(reasons),
    )


CONFIG_KEYS = {
    "a": float, "b": float, "d": float, "eps1": float,
    "eps2_re": float, "eps2_im": float, "eps3_re": float, "eps3_im": float,
    "loss_fraction": float, "n_max": int, "cells_N": int,
}


@dataclass(frozen=True)
class RunConfig:
    spec: CavitySpec
    loss_fraction: Optional[float] = None
    n_max: int = 3

    def canonical(self) -> str:
        """Stable text form used for the manifest digest."""
        s = self.spec
        items = [
            ("a", s.a), ("b", s.b), ("d", s.d), ("eps1", s.eps1),
            ("eps2_re", s.eps2.real), ("eps2_im", s.eps2.imag),
            ("eps3_re", s.eps3.real), ("eps3_im", s.eps3.imag),
            ("loss_fraction", self.loss_fraction), ("n_max", self.n_max),
            ("cells_N", s.N),
        ]
        return "\n".join(f"{k}={v!r}" for k, v in items) + "\n"


def parse_config(text: str) -> RunConfig:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](val)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from None
    eps1 = values.get("eps1", 13.0)
    eps3 = None
    if "eps3_re" in values or "eps3_im" in values:
        eps3 = complex(values.get("eps3_re", eps1), values.get("eps3_im", 0.0))
    try:
        spec = CavitySpec(
            a=values.get("a", 1.0),
            b=values.get("b", 0.25),
            d=values.get("d", 1.0),
            eps1=eps1,
            eps2=complex(values.get("eps2_re", 1.0), values.get("eps2_im", 0.0)),
            eps3=eps3,
            N=values.get("cells_N"),
        )
    except ConfigError as exc:
        raise ConfigError(f"invalid cavity: {exc}") from None
    n_max = values.get("n_max", 3)
    if n_max < 0:
        raise ConfigError("n_max must be >= 0")
    return RunConfig(spec=spec, loss_fraction=values.get("loss_fraction"), n_max=n_max)
