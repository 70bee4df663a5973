"""Full compartment network: state layout, right-hand side and Jacobian.

The state vector follows the block order of the linearized network:

    [H_A cells | X transceiver (A -> B) | H_B cells | Y transceiver (B -> A)]

Cell blocks are species-major (all m_T, then all p_T, ...), so a uniform
cell linearization appears as ``A_cell (x) I``. The X block is
``[X over all compartments (A first), R_B]`` and the Y block is
``[Y over all compartments (B first), R_A]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .graph import CompartmentGraph, build_laplacian, sender_first
from .kinetics import CELL_SPECIES, N_CELL, _cell_rhs, cell_jacobian
from .params import ParameterSet
from .transceiver import _rhs as _tx_rhs
from .transceiver import transceiver_jacobian


@dataclass(frozen=True)
class NetworkLayout:
    n_A: int
    n_B: int

    @property
    def N(self) -> int:
        return self.n_A + self.n_B

    @property
    def size(self) -> int:
        return 7 * self.N

    @property
    def cell_A(self) -> slice:
        return slice(0, N_CELL * self.n_A)

    @property
    def tx_AB(self) -> slice:
        s = self.cell_A.stop
        return slice(s, s + self.N + self.n_B)

    @property
    def cell_B(self) -> slice:
        s = self.tx_AB.stop
        return slice(s, s + N_CELL * self.n_B)

    @property
    def tx_BA(self) -> slice:
        s = self.cell_B.stop
        return slice(s, s + self.N + self.n_A)

    # named index helpers -------------------------------------------------
    def cell_index(self, cls: str, species: str, i: int) -> int:
        k = CELL_SPECIES.index(species)
        if cls == "A":
            return self.cell_A.start + k * self.n_A + i
        return self.cell_B.start + k * self.n_B + i

    def X_index(self, i: int) -> int:
        """X in compartment i of the A-first order."""
        return self.tx_AB.start + i

    def R_B_index(self, j: int) -> int:
        return self.tx_AB.start + self.N + j

    def Y_index(self, i: int) -> int:
        """Y in compartment i of the A-first order."""
        pos = i - self.n_A if i >= self.n_A else self.n_B + i
        return self.tx_BA.start + pos

    def R_A_index(self, i: int) -> int:
        return self.tx_BA.start + self.N + i

    def p_I_A(self) -> np.ndarray:
        k = CELL_SPECIES.index("p_I")
        return np.arange(self.cell_A.start + k * self.n_A, self.cell_A.start + (k + 1) * self.n_A)

    def p_I_B(self) -> np.ndarray:
        k = CELL_SPECIES.index("p_I")
        return np.arange(self.cell_B.start + k * self.n_B, self.cell_B.start + (k + 1) * self.n_B)

    def R_A(self) -> np.ndarray:
        return np.arange(self.tx_BA.start + self.N, self.tx_BA.stop)

    def R_B(self) -> np.ndarray:
        return np.arange(self.tx_AB.start + self.N, self.tx_AB.stop)

    def labels(self, order: list[str] | None = None) -> list[str]:
        """Column labels ``<compartment>:<species>`` in state order."""
        order = order or [f"A{i + 1}" for i in range(self.n_A)] + [f"B{j + 1}" for j in range(self.n_B)]
        a_ids, b_ids = order[: self.n_A], order[self.n_A:]
        out = [f"{a}:{s}" for s in CELL_SPECIES for a in a_ids]
        out += [f"{v}:X" for v in order] + [f"{b}:R_B" for b in b_ids]
        out += [f"{b}:{s}" for s in CELL_SPECIES for b in b_ids]
        out += [f"{v}:Y" for v in b_ids + a_ids] + [f"{a}:R_A" for a in a_ids]
        return out

    def cone_signs(self) -> np.ndarray:
        """Sign pattern of the ordering cone under which the network is monotone.

        H_A cells use K = (+, +, -, -), the X transceiver is reversed, H_B
        cells use -K and the Y transceiver is forward.
        """
        s = np.empty(self.size)
        K = np.repeat([1.0, 1.0, -1.0, -1.0], self.n_A)
        s[self.cell_A] = K
        s[self.tx_AB] = -1.0
        s[self.cell_B] = -np.repeat([1.0, 1.0, -1.0, -1.0], self.n_B)
        s[self.tx_BA] = 1.0
        return s


def _transceiver_params(sender: ParameterSet, receiver: ParameterSet) -> ParameterSet:
    if sender is receiver:
        return sender
    return sender.replace(k_on=receiver.k_on, k_off=receiver.k_off, p_Ri=receiver.p_Ri)


@dataclass(frozen=True)
class Network:
    """A/B compartment network with its Laplacian in A-first order."""

    L: np.ndarray
    n_A: int
    n_B: int
    params_A: ParameterSet = field(default_factory=ParameterSet)
    params_B: ParameterSet | None = None
    order: tuple[str, ...] = ()

    @classmethod
    def from_graph(cls, g: CompartmentGraph, params_A: ParameterSet | None = None,
                   params_B: ParameterSet | None = None, scale=None) -> "Network":
        return cls(build_laplacian(g, scale), g.n_A, g.n_B, params_A or ParameterSet(),
                   params_B, tuple(g.order))

    @property
    def pB(self) -> ParameterSet:
        return self.params_B if self.params_B is not None else self.params_A

    @cached_property
    def layout(self) -> NetworkLayout:
        return NetworkLayout(self.n_A, self.n_B)

    @cached_property
    def L_Y(self) -> np.ndarray:
        return sender_first(self.L, self.n_A, "BA")

    @cached_property
    def p_AB(self) -> ParameterSet:
        return _transceiver_params(self.params_A, self.pB)

    @cached_property
    def p_BA(self) -> ParameterSet:
        return _transceiver_params(self.pB, self.params_A)

    def labels(self) -> list[str]:
        return self.layout.labels(list(self.order) if self.order else None)


def _cells(y: np.ndarray, sl: slice, n: int) -> np.ndarray:
    return y[sl].reshape(N_CELL, n).T


def network_rhs(y: np.ndarray, net: Network) -> np.ndarray:
    """Derivative of the full network state.

    Cell outputs p_I feed the synthesis terms of their transceiver; the
    complexes R feed the cell inputs.
    """
    lay = net.layout
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    xa = _cells(y, lay.cell_A, lay.n_A)
    xb = _cells(y, lay.cell_B, lay.n_B)
    R_B = y[lay.R_B()]
    R_A = y[lay.R_A()]
    dA = _cell_rhs(xa, R_A, net.params_A)
    dB = _cell_rhs(xb, R_B, net.pB)
    out[lay.cell_A] = dA.T.ravel()
    out[lay.cell_B] = dB.T.ravel()
    out[lay.tx_AB] = _tx_rhs(y[lay.tx_AB], xa[:, 3], net.L, lay.n_A, net.p_AB)
    out[lay.tx_BA] = _tx_rhs(y[lay.tx_BA], xb[:, 3], net.L_Y, lay.n_B, net.p_BA)
    return out


def _place_cells(J: np.ndarray, start: int, n: int, states: np.ndarray, inputs: np.ndarray,
                 p: ParameterSet, input_idx: np.ndarray) -> None:
    for i in range(n):
        A, B, _ = cell_jacobian(states[i], inputs[i], p)
        rows = start + np.arange(N_CELL) * n + i
        J[np.ix_(rows, rows)] = A
        J[rows[0], input_idx[i]] = B[0, 0]


def network_jacobian(y: np.ndarray, net: Network) -> np.ndarray:
    """Analytic Jacobian of :func:`network_rhs`."""
    lay = net.layout
    y = np.asarray(y, dtype=float)
    J = np.zeros((lay.size, lay.size))
    xa = np.maximum(_cells(y, lay.cell_A, lay.n_A), 0.0)
    xb = np.maximum(_cells(y, lay.cell_B, lay.n_B), 0.0)
    R_A_idx, R_B_idx = lay.R_A(), lay.R_B()
    _place_cells(J, lay.cell_A.start, lay.n_A, xa, np.maximum(y[R_A_idx], 0.0), net.params_A, R_A_idx)
    _place_cells(J, lay.cell_B.start, lay.n_B, xb, np.maximum(y[R_B_idx], 0.0), net.pB, R_B_idx)
    for sl, L, n_send, p, pI_idx in (
        (lay.tx_AB, net.L, lay.n_A, net.p_AB, lay.p_I_A()),
        (lay.tx_BA, net.L_Y, lay.n_B, net.p_BA, lay.p_I_B()),
    ):
        A, B, _ = transceiver_jacobian(y[sl], L, p, n_send)
        J[sl, sl] = A
        rows = sl.start + np.arange(n_send)
        J[rows, pI_idx] = B[np.arange(n_send), np.arange(n_send)]
    return J


@dataclass(frozen=True)
class NetworkState:
    """Named view onto a network state vector."""

    y: np.ndarray
    layout: NetworkLayout

    def cells(self, cls: str) -> np.ndarray:
        """(n, 4) array of (m_T, p_T, m_I, p_I) per compartment of class ``cls``."""
        if cls == "A":
            return _cells(self.y, self.layout.cell_A, self.layout.n_A)
        return _cells(self.y, self.layout.cell_B, self.layout.n_B)

    @property
    def X(self) -> np.ndarray:
        return self.y[self.layout.tx_AB][: self.layout.N]

    @property
    def Y(self) -> np.ndarray:
        """Y in A-first compartment order."""
        lay = self.layout
        yb = self.y[lay.tx_BA][: lay.N]
        return np.concatenate([yb[lay.n_B:], yb[: lay.n_B]])

    @property
    def R_A(self) -> np.ndarray:
        return self.y[self.layout.R_A()]

    @property
    def R_B(self) -> np.ndarray:
        return self.y[self.layout.R_B()]

    @property
    def p_I_A(self) -> np.ndarray:
        return self.y[self.layout.p_I_A()]

    @property
    def p_I_B(self) -> np.ndarray:
        return self.y[self.layout.p_I_B()]
