"""AHL transceiver: synthesis in the sending compartments, exchange through
the channel network, and receptor binding in the receiving compartments.

Every function works on a Laplacian ordered sender-first. The X transceiver
(A -> B) uses the A-first Laplacian as is; the Y transceiver (B -> A) uses
``graph.sender_first(L, n_A, "BA")`` and is otherwise the same code.

The state vector is ``[X_send, X_recv, R_recv]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maps import StaticMap
from .params import DomainError, ParameterSet


@dataclass(frozen=True)
class TransceiverState:
    X_send: np.ndarray
    X_recv: np.ndarray
    R_recv: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.X_send, self.X_recv, self.R_recv])

    @classmethod
    def from_vector(cls, v, n_send: int) -> "TransceiverState":
        v = np.asarray(v, dtype=float)
        n_recv = (v.size - n_send) // 2
        if n_send + 2 * n_recv != v.size:
            raise ValueError(f"vector of length {v.size} does not fit n_send={n_send}")
        return cls(v[:n_send].copy(), v[n_send:n_send + n_recv].copy(), v[n_send + n_recv:].copy())

    @property
    def X(self) -> np.ndarray:
        return np.concatenate([self.X_send, self.X_recv])


def _split(v: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    return v[:N], v[N:]


def _rhs(v: np.ndarray, p_I: np.ndarray, L: np.ndarray, n_send: int, p: ParameterSet) -> np.ndarray:
    N = L.shape[0]
    X, R = _split(v, N)
    X_r = X[n_send:]
    bind = p.k_on * X_r * (p.p_Ri - R) - p.k_off * R
    dX = L @ X - p.gamma_X * X
    dX[:n_send] += p.nu * p_I
    dX[n_send:] -= bind
    return np.concatenate([dX, bind])


def _check_dims(n_vec: int, p_I: np.ndarray, L: np.ndarray, n_send: int) -> None:
    N = L.shape[0]
    if L.shape != (N, N):
        raise ValueError("Laplacian must be square")
    if not 0 < n_send < N:
        raise ValueError(f"n_send={n_send} incompatible with {N} compartments")
    if p_I.shape != (n_send,):
        raise ValueError(f"input has shape {p_I.shape}, expected ({n_send},)")
    if n_vec != 2 * N - n_send:
        raise ValueError(f"state has {n_vec} entries, expected {2 * N - n_send}")


def transceiver_rhs(st, p_I, L: np.ndarray, p: ParameterSet, n_send: int | None = None) -> np.ndarray:
    """Derivative of the transceiver state under synthase levels ``p_I``."""
    if isinstance(st, TransceiverState):
        n_send = st.X_send.size
        st = st.as_vector()
    if n_send is None:
        raise ValueError("n_send is required for a raw state vector")
    v = np.asarray(st, dtype=float)
    p_I = np.atleast_1d(np.asarray(p_I, dtype=float))
    _check_dims(v.size, p_I, L, n_send)
    if np.any(v < 0) or np.any(p_I < 0):
        raise DomainError("transceiver state and input must be nonnegative")
    return _rhs(v, p_I, L, n_send, p)


def receptor_binding(X_recv, p: ParameterSet):
    """Equilibrium complex p_Ri * X / (X + K_d); zero at X = 0, p_Ri as X -> inf."""
    X_recv = np.asarray(X_recv, dtype=float)
    with np.errstate(invalid="ignore"):
        out = p.p_Ri * X_recv / (X_recv + p.K_d)
    return np.where(np.isinf(X_recv), p.p_Ri, out)


def transceiver_steady_state(p_I_star, L: np.ndarray, p: ParameterSet) -> TransceiverState:
    """Unique equilibrium for held synthase levels (sender-first Laplacian)."""
    p_I_star = np.atleast_1d(np.asarray(p_I_star, dtype=float))
    if np.any(p_I_star < 0):
        raise DomainError("synthase levels must be nonnegative")
    N = L.shape[0]
    n_send = p_I_star.size
    _check_dims(2 * N - n_send, p_I_star, L, n_send)
    rhs = np.zeros(N)
    rhs[:n_send] = p.nu * p_I_star
    M = p.gamma_X * np.eye(N) - L
    X = np.linalg.solve(M, rhs)
    X = np.maximum(X, 0.0)  # rounding only; the inverse is entrywise positive
    return TransceiverState(X[:n_send], X[n_send:], receptor_binding(X[n_send:], p))


def transceiver_jacobian(st, L: np.ndarray, p: ParameterSet,
                         n_send: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Linearization (A, B, C): input is the synthase vector, output the complexes."""
    if isinstance(st, TransceiverState):
        n_send = st.X_send.size
        st = st.as_vector()
    v = np.asarray(st, dtype=float)
    N = L.shape[0]
    n_recv = N - n_send
    X, R = _split(v, N)
    X_r = X[n_send:]
    dim = N + n_recv
    A = np.zeros((dim, dim))
    A[:N, :N] = L - p.gamma_X * np.eye(N)
    r = np.arange(n_recv)
    xr, rr = n_send + r, N + r
    A[xr, xr] -= p.k_on * (p.p_Ri - R)
    A[xr, rr] += p.k_on * X_r + p.k_off
    A[rr, xr] += p.k_on * (p.p_Ri - R)
    A[rr, rr] -= p.k_on * X_r + p.k_off
    B = np.zeros((dim, n_send))
    B[np.arange(n_send), np.arange(n_send)] = p.nu
    C = np.zeros((n_recv, dim))
    C[r, rr] = 1.0
    return A, B, C


def solve_refined(A: np.ndarray, B: np.ndarray, steps: int = 2) -> np.ndarray:
    """``A^{-1} B`` with iterative refinement (residuals in extended precision).

    Transceiver Jacobians mix binding rates near 1e3/s with degradation near
    1e-4/s, so a plain solve loses several digits.
    """
    x = np.linalg.solve(A, B)
    Al, Bl = A.astype(np.longdouble), B.astype(np.longdouble)
    for _ in range(steps):
        r = (Bl - Al @ x.astype(np.longdouble)).astype(float)
        x = x + np.linalg.solve(A, r)
    return x


def dc_gain(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Steady-state input/output sensitivity -C A^{-1} B."""
    return -C @ solve_refined(A, B)


def _decoupled_offset(d_AB: float, d_BA: float, p: ParameterSet) -> float:
    if not (d_AB > 0 and d_BA > 0):
        raise DomainError("quotient weights must be positive")
    g = p.gamma_X
    return p.K_d * g * (g + d_AB + d_BA) / (d_BA * p.nu)


def decoupled_T_AB(z_A, d_AB: float, d_BA: float, p: ParameterSet):
    """Complex level in every receiving compartment when all senders hold z_A.

    Written as ``p_Ri * z / (z + c)``, i.e. ``p_Ri / (1 + c / z)``, so z = 0
    gives 0 without a division.
    """
    z_A = np.asarray(z_A, dtype=float)
    if np.any(z_A < 0):
        raise DomainError("synthase level must be nonnegative")
    c = _decoupled_offset(d_AB, d_BA, p)
    return p.p_Ri * z_A / (z_A + c)


def decoupled_T_AB_prime(z_A, d_AB: float, d_BA: float, p: ParameterSet):
    z_A = np.asarray(z_A, dtype=float)
    c = _decoupled_offset(d_AB, d_BA, p)
    return p.p_Ri * c / (z_A + c) ** 2


def transceiver_map(d_send: float, d_recv: float, p: ParameterSet) -> StaticMap:
    """Decoupled map for a transceiver whose senders push ``d_send`` into the
    receiving class and whose receivers push ``d_recv`` back.

    ``transceiver_map(d_AB, d_BA, p)`` is T_AB; swap the weights for T_BA.
    """
    return StaticMap(
        lambda z: decoupled_T_AB(z, d_send, d_recv, p),
        lambda z: decoupled_T_AB_prime(z, d_send, d_recv, p),
        "T_tx",
    )


@dataclass(frozen=True)
class ContractionResult:
    measure: float  # 1/s
    weights: np.ndarray
    k: float


def matrix_measure_1(M: np.ndarray) -> float:
    """Induced one-norm measure: max over columns of diagonal + |off-diagonal| sum."""
    absM = np.abs(M)
    cols = np.diag(M) + absM.sum(axis=0) - np.diag(absM)
    return float(cols.max())


def contraction_check(st, L: np.ndarray, p: ParameterSet, n_send: int | None = None,
                      strict: bool = True) -> ContractionResult:
    """Weighted one-norm measure of the transceiver Jacobian at ``st``.

    The receptor rows are weighted by k, the midpoint of
    (1, 1 + gamma_X / (k_on p_Ri)), which makes every column sum negative.
    """
    if isinstance(st, TransceiverState):
        n_send = st.X_send.size
        st = st.as_vector()
    v = np.asarray(st, dtype=float)
    N = L.shape[0]
    R = v[N:]
    if np.any(v < 0) or np.any(R >= p.p_Ri):
        raise DomainError("state must be nonnegative with complexes below p_Ri")
    k_hi = 1.0 + p.gamma_X / (p.k_on * p.p_Ri)
    assert k_hi > 1.0, "admissible weight interval is empty"
    k = 0.5 * (1.0 + k_hi)
    J, _, _ = transceiver_jacobian(v, L, p, n_send)
    w = np.ones(J.shape[0])
    w[N:] = k
    M = (w[:, None] * J) / w[None, :]
    mu = matrix_measure_1(M)
    if strict and not mu < 0:
        raise AssertionError(f"transceiver contraction measure is {mu:.3g} >= 0")
    return ContractionResult(mu, w, k)
