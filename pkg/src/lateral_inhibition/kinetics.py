"""Inhibitory cell circuit: TetR mRNA/protein driven by the receptor complex,
synthase mRNA/protein repressed by TetR.

Cell state layout is ``(m_T, p_T, m_I, p_I)``; the input is the receptor
complex concentration R and the output is the synthase protein p_I.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maps import StaticMap
from .params import DomainError, ParameterSet

N_CELL = 4
CELL_SPECIES = ("m_T", "p_T", "m_I", "p_I")


@dataclass(frozen=True)
class CellState:
    m_T: float
    p_T: float
    m_I: float
    p_I: float

    def __post_init__(self) -> None:
        if min(self.m_T, self.p_T, self.m_I, self.p_I) < 0:
            raise DomainError("cell state components must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array([self.m_T, self.p_T, self.m_I, self.p_I])

    @classmethod
    def from_array(cls, a) -> "CellState":
        return cls(*map(float, a))


def hill_activation(R, K: float, n: float):
    """R^n / (R^n + K^n); zero at R = 0."""
    R = np.asarray(R, dtype=float)
    Rn = R**n
    return Rn / (Rn + K**n)


def hill_activation_prime(R, K: float, n: float):
    R = np.asarray(R, dtype=float)
    Rn = R**n
    with np.errstate(divide="ignore", invalid="ignore"):
        out = n * K**n * R ** (n - 1) / (Rn + K**n) ** 2
    return out


def hill_repression(p, K: float, n: float):
    return 1.0 / (1.0 + (np.asarray(p, dtype=float) / K) ** n)


def hill_repression_prime(p, K: float, n: float):
    q = np.asarray(p, dtype=float) / K
    return -n * q ** (n - 1) / (K * (1.0 + q**n) ** 2)


def _cell_rhs(s: np.ndarray, R, p: ParameterSet) -> np.ndarray:
    """Unchecked right-hand side; ``s`` has trailing axis of length 4.

    Hill arguments are floored at zero so tiny negative excursions of an
    integrator cannot produce NaNs for non-integer Hill coefficients.
    """
    m_T, p_T, m_I, p_I = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
    R = np.maximum(R, 0.0)
    out = np.empty(np.broadcast(m_T, R).shape + (N_CELL,))
    out[..., 0] = (p.V_PLuxI * p.N_PLuxI * p.C * (hill_activation(R, p.K_RA, p.n_RA) + p.leak_PLuxI)
                   - p.gamma_mT * m_T)
    out[..., 1] = p.eps_T * m_T - p.gamma_T * p_T
    out[..., 2] = (p.V_PLtetO1 * p.N_PLtetO1 * p.C * (hill_repression(np.maximum(p_T, 0.0), p.K_T, p.n_T) + p.leak_PLtetO1)
                   - p.gamma_mI * m_I)
    out[..., 3] = p.eps_I * m_I - p.gamma_I * p_I
    return out


def cell_rhs(s, R_input, p: ParameterSet) -> np.ndarray:
    """Time derivative of one cell state (or a stack of them) at input ``R_input``."""
    s = np.asarray(s.as_array() if isinstance(s, CellState) else s, dtype=float)
    if s.shape[-1] != N_CELL:
        raise ValueError(f"cell state needs {N_CELL} components, got shape {s.shape}")
    if np.any(s < 0) or np.any(np.asarray(R_input) < 0):
        raise DomainError("cell state and input must be nonnegative")
    return _cell_rhs(s, R_input, p)


def cell_steady_state(R, p: ParameterSet) -> np.ndarray:
    """Unique equilibrium of the triangular chain at constant input R."""
    R = np.asarray(R, dtype=float)
    m_T = p.V_PLuxI * p.N_PLuxI * p.C * (hill_activation(R, p.K_RA, p.n_RA) + p.leak_PLuxI) / p.gamma_mT
    p_T = p.eps_T * m_T / p.gamma_T
    m_I = p.V_PLtetO1 * p.N_PLtetO1 * p.C * (hill_repression(np.maximum(p_T, 0.0), p.K_T, p.n_T) + p.leak_PLtetO1) / p.gamma_mI
    p_I = p.eps_I * m_I / p.gamma_I
    return np.stack([m_T, p_T, m_I, p_I], axis=-1)


def cell_jacobian(s, R, p: ParameterSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Linearization (A, B, C) of one cell: 4x4 state, 4x1 input, 1x4 output."""
    s = np.asarray(s, dtype=float)
    A = np.zeros((4, 4))
    A[0, 0] = -p.gamma_mT
    A[1, 0] = p.eps_T
    A[1, 1] = -p.gamma_T
    A[2, 1] = p.V_PLtetO1 * p.N_PLtetO1 * p.C * hill_repression_prime(max(s[1], 0.0), p.K_T, p.n_T)
    A[2, 2] = -p.gamma_mI
    A[3, 2] = p.eps_I
    A[3, 3] = -p.gamma_I
    B = np.zeros((4, 1))
    B[0, 0] = p.V_PLuxI * p.N_PLuxI * p.C * hill_activation_prime(np.maximum(R, 0.0), p.K_RA, p.n_RA)
    C = np.zeros((1, 4))
    C[0, 3] = 1.0
    return A, B, C


def static_map_T(R_star, p: ParameterSet):
    """Steady synthase level p_I* as a function of a held receptor complex level."""
    R_star = np.asarray(R_star, dtype=float)
    if np.any(R_star < 0):
        raise DomainError("receptor complex concentration must be nonnegative")
    q = (p.K2 / p.K_T) * (hill_activation(R_star, p.K_RA, p.n_RA) + p.leak_PLuxI)
    return p.K1 * (1.0 / (1.0 + q**p.n_T) + p.leak_PLtetO1)


def static_map_T_prime(R_star, p: ParameterSet):
    """dT/dR, strictly negative for R > 0; the R -> 0 limit is 0 when n_RA > 1."""
    R_star = np.asarray(R_star, dtype=float)
    if np.any(R_star < 0):
        raise DomainError("receptor complex concentration must be nonnegative")
    g = p.K2 / p.K_T
    q = g * (hill_activation(R_star, p.K_RA, p.n_RA) + p.leak_PLuxI)
    dq = g * hill_activation_prime(R_star, p.K_RA, p.n_RA)
    return -p.K1 * p.n_T * q ** (p.n_T - 1) * dq / (1.0 + q**p.n_T) ** 2


def cell_map(p: ParameterSet) -> StaticMap:
    return StaticMap(lambda r: static_map_T(r, p), lambda r: static_map_T_prime(r, p), "T")
