"""Rate constants for the two-AHL lateral inhibition circuit.

All concentrations are molar, all rates per second. The defaults are the
published values; ``p_Ri`` has no published default (it is the swept
quantity) so it defaults to the value used for the ODE/PDE comparison run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Mapping


class DomainError(ValueError):
    """Raised when an input lies outside the physical domain of a model."""


@dataclass(frozen=True)
class ParameterSet:
    k_on: float = 1e9  # s^-1 M^-1
    k_off: float = 50.0  # s^-1
    p_Ri: float = 5e-7  # M, total receptor (LuxR variant)
    V_PLuxI: float = 0.26
    N_PLuxI: float = 5.0
    C: float = 1.5e-9  # M per molecule in one cell
    K_RA: float = 1.5e-9
    n_RA: float = 2.0
    leak_PLuxI: float = 1.0 / 167.0
    V_PLtetO1: float = 0.3
    N_PLtetO1: float = 5.0
    K_T: float = 1.786e-10
    n_T: float = 2.0
    leak_PLtetO1: float = 1.0 / 5050.0
    gamma_X: float = 7.70e-4  # AHL degradation
    gamma_mT: float = 5.78e-3
    gamma_T: float = 2.89e-4
    gamma_mI: float = 5.78e-3
    gamma_I: float = 1.16e-3
    eps_T: float = 6.224e-6
    eps_I: float = 2.655e-5
    nu: float = 0.0135  # AHL generation per synthase

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or v != v:
                raise DomainError(f"{f.name} must be a real number, got {v!r}")
            if v <= 0:
                raise DomainError(f"{f.name} must be positive, got {v}")
        for name in ("n_RA", "n_T"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        for name in ("leak_PLuxI", "leak_PLtetO1"):
            if not 0 < getattr(self, name) < 1:
                raise DomainError(f"{name} must lie in (0, 1)")

    @property
    def K1(self) -> float:
        """Maximal steady synthase level (M)."""
        return (self.eps_I / self.gamma_I) * (
            self.V_PLtetO1 * self.N_PLtetO1 * self.C / self.gamma_mI
        )

    @property
    def K2(self) -> float:
        """Maximal steady TetR level per unit promoter activity (M)."""
        return (self.eps_T / self.gamma_T) * (
            self.V_PLuxI * self.N_PLuxI * self.C / self.gamma_mT
        )

    @property
    def K_d(self) -> float:
        """Receptor dissociation constant k_off/k_on (M)."""
        return self.k_off / self.k_on

    @property
    def output_bound(self) -> float:
        """Upper bound of the synthase static map."""
        return self.K1 * (1.0 + self.leak_PLtetO1)

    def replace(self, **changes: float) -> "ParameterSet":
        return dataclasses.replace(self, **changes)

    def scaled(self, factors: Mapping[str, float]) -> "ParameterSet":
        """Return a copy with each named parameter multiplied by its factor."""
        return self.replace(**{k: getattr(self, k) * f for k, f in factors.items()})

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base: "ParameterSet | None" = None) -> "ParameterSet":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        base = base or cls()
        return base.replace(**{k: float(v) for k, v in data.items()})

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))


DEFAULTS = ParameterSet()

# Parameters that keep a discrete meaning and are excluded from random
# perturbation draws unless asked for explicitly.
COUNT_PARAMETERS = ("N_PLuxI", "N_PLtetO1")


def perturbed(rng, base: ParameterSet = DEFAULTS, spread: float = 0.5,
              skip: tuple[str, ...] = COUNT_PARAMETERS) -> ParameterSet:
    """Every parameter not in ``skip`` scaled by an independent U(1 - spread, 1 + spread).

    Hill coefficients are floored at 1 and leakages capped below 1 so the
    draw stays in the model's domain.
    """
    if not 0 <= spread < 1:
        raise ValueError("spread must lie in [0, 1)")
    out = {}
    for name in ParameterSet.names():
        if name in skip:
            continue
        v = getattr(base, name) * rng.uniform(1 - spread, 1 + spread)
        if name.startswith("n_"):
            v = max(v, 1.0)
        elif name.startswith("leak_"):
            v = min(v, 0.999)
        out[name] = v
    return base.replace(**out)
