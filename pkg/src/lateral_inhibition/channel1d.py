"""1-D finite-volume diffusion/degradation of AHL along a channel, coupled to
well-mixed compartments at both ends.

Geometry is planar: compartments are squares of side ``w`` (area ``w**2``)
and the channel is a strip of length ``l`` and width ``w``. With that choice
a channel carrying no AHL mass reduces exactly to the compartmental edge
weight ``D / (l w)``.

A field vector is ``[c_left, u_0 .. u_{n-1}, c_right]`` where the ``c`` are
the boundary values (reservoir or fixed concentration; unused at a wall).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .graph import D_AHL_25C, CompartmentGraph, build_laplacian, edge_weight, two_compartment
from .network import Network, network_jacobian, network_rhs
from .params import DomainError, ParameterSet
from .simulate import (HOUR, IntegratorControls, NotConverged, Trajectory, estimate_time_constant,
                       integrate, integrate_system, network_caps, seeded_initial_state)

MIN_CELLS = 50
MAX_CORRECTED_LENGTH = 3e-3  # m
MAX_COMPARE_LENGTH = 5e-3  # m

BOUNDARY_KINDS = ("wall", "fixed", "reservoir")


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelMesh:
    length: float  # m
    width: float  # m
    n_cells: int = 100
    diffusivity: float = D_AHL_25C
    reservoir_area: float | None = None  # m^2, defaults to width**2

    def __post_init__(self) -> None:
        if not (self.length > 0 and self.width > 0 and self.diffusivity > 0):
            raise DomainError("length, width and diffusivity must be positive")
        if self.n_cells < MIN_CELLS:
            raise ValueError(f"need at least {MIN_CELLS} cells (dx <= l/{MIN_CELLS})")

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def x(self) -> np.ndarray:
        """Cell centres (m)."""
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def area(self) -> float:
        return self.reservoir_area if self.reservoir_area is not None else self.width**2


@dataclass(frozen=True)
class ChannelState:
    mesh: ChannelMesh
    v: np.ndarray  # [c_left, u..., c_right]
    left: str = "reservoir"
    right: str = "reservoir"
    t: float = 0.0

    def __post_init__(self) -> None:
        for kind in (self.left, self.right):
            if kind not in BOUNDARY_KINDS:
                raise ValueError(f"unknown boundary kind {kind!r}")
        if self.v.shape != (self.mesh.n_cells + 2,):
            raise ValueError("field vector length must be n_cells + 2")

    @property
    def u(self) -> np.ndarray:
        return self.v[1:-1]

    @classmethod
    def uniform(cls, mesh: ChannelMesh, value: float = 0.0, left: str = "reservoir",
                right: str = "reservoir", c_left: float = 0.0, c_right: float = 0.0) -> "ChannelState":
        v = np.full(mesh.n_cells + 2, float(value))
        v[0], v[-1] = c_left, c_right
        return cls(mesh, v, left, right)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x_um", "concentration_M"])
            for xi, ui in zip(self.mesh.x * 1e6, self.u):
                w.writerow([f"{xi:.10g}", f"{ui:.12g}"])


def channel_operator(mesh: ChannelMesh, gamma: float, left: str = "reservoir",
                     right: str = "reservoir", reservoir_decay: bool = True) -> sp.csr_matrix:
    """Linear operator ``dv/dt = A v`` on the extended field vector.

    Boundary faces sit half a cell from the outer centres. Whatever a
    reservoir gives to the channel it loses, so the discrete flux is
    continuous at the junctions.
    """
    n, dx, D, w = mesh.n_cells, mesh.dx, mesh.diffusivity, mesh.width
    size = n + 2
    rows, cols, vals = [], [], []

    def add(i, j, a):
        rows.append(i)
        cols.append(j)
        vals.append(a)

    g_in = D / dx**2
    for i in range(1, n + 1):
        add(i, i, -gamma)
        if i > 1:
            add(i, i, -g_in)
            add(i, i - 1, g_in)
        if i < n:
            add(i, i, -g_in)
            add(i, i + 1, g_in)
    # face conductance to a boundary value, per unit channel width
    g_face = 2 * D / dx
    for kind, b, c in ((left, 0, 1), (right, n + 1, n)):
        if kind == "wall":
            continue
        add(c, c, -g_face / dx)
        add(c, b, g_face / dx)
        if kind == "reservoir":
            s = g_face * w / mesh.area
            add(b, b, -s)
            add(b, c, s)
            if reservoir_decay:
                add(b, b, -gamma)
    return sp.csr_matrix((vals, (rows, cols)), shape=(size, size))


def mass(state: ChannelState) -> float:
    """AHL amount per unit depth (M m^2): channel plus reservoirs."""
    m = state.mesh
    total = m.width * m.dx * state.u.sum()
    for kind, c in ((state.left, state.v[0]), (state.right, state.v[-1])):
        if kind == "reservoir":
            total += m.area * c
    return float(total)


def boundary_inflow(state: ChannelState) -> float:
    """Amount per unit depth per second entering through fixed-value ends."""
    m = state.mesh
    g_face = 2 * m.diffusivity / m.dx * m.width
    out = 0.0
    if state.left == "fixed":
        out += g_face * (state.v[0] - state.u[0])
    if state.right == "fixed":
        out += g_face * (state.v[-1] - state.u[-1])
    return out


def degradation_rate(state: ChannelState, gamma: float) -> float:
    return gamma * mass(state)


def explicit_dt_limit(A: sp.spmatrix) -> float:
    """Largest forward-Euler step that keeps every update a convex combination.

    In the channel interior this is dx^2 / (2 D + gamma dx^2).
    """
    return 1.0 / float(np.max(np.abs(A.diagonal())))


def step_pde(state: ChannelState, gamma: float, dt: float, implicit: bool = True,
             n_steps: int = 1, source: np.ndarray | None = None,
             reservoir_decay: bool = True) -> ChannelState:
    """Advance the field by ``n_steps`` steps of size ``dt`` (s).

    Backward Euler by default; ``implicit=False`` uses forward Euler and
    raises CFLError above the stable step. ``source`` adds a constant rate
    (M/s) per entry of the extended vector.
    """
    A = channel_operator(state.mesh, gamma, state.left, state.right, reservoir_decay)
    frozen = np.array([state.left != "reservoir"] + [False] * state.mesh.n_cells
                      + [state.right != "reservoir"])
    A = A.tocsc()  # rows of non-reservoir boundary values are already empty
    s = np.zeros(A.shape[0]) if source is None else np.asarray(source, dtype=float).copy()
    s[frozen] = 0.0
    v = state.v.copy()
    if implicit:
        lu = splu((sp.identity(A.shape[0], format="csc") - dt * A).tocsc())
        for _ in range(n_steps):
            v = lu.solve(v + dt * s)
    else:
        if dt > explicit_dt_limit(A):
            raise CFLError(f"dt={dt:.3g} s exceeds the explicit limit {explicit_dt_limit(A):.3g} s")
        for _ in range(n_steps):
            v = v + dt * (A @ v + s)
    return ChannelState(state.mesh, v, state.left, state.right, state.t + n_steps * dt)


def steady_profile_fixed_wall(x, c0: float, length: float, gamma: float, D: float = D_AHL_25C):
    """Steady D u'' = gamma u with u(0) = c0 and no flux at x = length."""
    lam = np.sqrt(gamma / D)
    return c0 * np.cosh(lam * (length - np.asarray(x))) / np.cosh(lam * length)


def steady_profile_fixed_fixed(x, a: float, b: float, length: float, gamma: float, D: float = D_AHL_25C):
    lam = np.sqrt(gamma / D)
    x = np.asarray(x)
    return (a * np.sinh(lam * (length - x)) + b * np.sinh(lam * x)) / np.sinh(lam * length)


def _attenuation(p: ParameterSet, l12: float, diffusivity: float) -> tuple[float, float]:
    """(lam l / sinh(lam l), lam l tanh(lam l / 2)) for one channel."""
    z = np.sqrt(p.gamma_X / diffusivity) * l12
    if z < 1e-8:
        return 1.0, 0.0
    return float(z / np.sinh(z)), float(z * np.tanh(z / 2))


def correction_factor(p: ParameterSet, l12: float, diffusivity: float = D_AHL_25C) -> float:
    """Flux transmitted through a degrading channel relative to a lossless one.

    From the steady profile between held end concentrations the far-end flux
    is scaled by lam l / sinh(lam l), lam = sqrt(gamma_X / D).
    """
    if not 0 < l12 <= MAX_CORRECTED_LENGTH:
        raise DomainError(f"correction factor defined for 0 < l12 <= {MAX_CORRECTED_LENGTH} m")
    return _attenuation(p, l12, diffusivity)[0]


def channel_loss_rate(p: ParameterSet, l12: float, width: float, diffusivity: float = D_AHL_25C) -> float:
    """Extra first-order loss (1/s) a compartment sees from AHL degrading in
    one attached channel, in the quasi-static limit: d lam l tanh(lam l / 2).

    For short channels this is about gamma_X * (l w) / (2 w^2), i.e. half the
    channel area degrades at the compartment's concentration.
    """
    return edge_weight(l12, width, diffusivity) * _attenuation(p, l12, diffusivity)[1]


CORRECTIONS = ("two_port", "factor", "none")


def corrected_laplacian(g: CompartmentGraph, p: ParameterSet, correction: str = "two_port") -> np.ndarray:
    """Compartmental Laplacian adjusted for degradation inside the channels.

    ``"factor"`` only scales every edge weight by :func:`correction_factor`.
    ``"two_port"`` also adds :func:`channel_loss_rate` to the diagonal, which
    is what a quasi-static channel between two compartments actually does;
    the result is no longer zero-row-sum.
    """
    if correction not in CORRECTIONS:
        raise ValueError(f"correction must be one of {CORRECTIONS}")
    if correction == "none":
        return build_laplacian(g)
    L = build_laplacian(g, scale=lambda ch: _attenuation(p, ch.length, g.diffusivity)[0])
    if correction == "two_port":
        idx = {v: i for i, v in enumerate(g.order)}
        for ch in g.channels:
            loss = channel_loss_rate(p, ch.length, g.channel_width(ch), g.diffusivity)
            L[idx[ch.u], idx[ch.u]] -= loss
            L[idx[ch.v], idx[ch.v]] -= loss
    return L


# ---------------------------------------------------------------------------
# coupled compartments + channels


@dataclass(frozen=True)
class CoupledModel:
    """Two compartments joined by one channel per AHL species."""

    net: Network  # zero Laplacian; channel exchange is added here
    mesh: ChannelMesh
    G: sp.csr_matrix  # linear channel coupling on the full state

    @property
    def n_net(self) -> int:
        return self.net.layout.size

    def rhs(self, y: np.ndarray) -> np.ndarray:
        out = self.G @ y
        out[: self.n_net] += network_rhs(y[: self.n_net], self.net)
        return out

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        J = self.G.toarray()
        J[: self.n_net, : self.n_net] += network_jacobian(y[: self.n_net], self.net)
        return J

    def channel(self, y: np.ndarray, species: str = "X") -> np.ndarray:
        n = self.mesh.n_cells
        start = self.n_net + (0 if species == "X" else n)
        return y[start:start + n]


def coupled_model(p: ParameterSet, l12: float, width_factor: float = 1.0,
                  n_cells: int = 100) -> CoupledModel:
    mesh = ChannelMesh(l12, l12 / width_factor, n_cells)
    net = Network(np.zeros((2, 2)), 1, 1, p, order=("A1", "B1"))
    lay = net.layout
    n = mesh.n_cells
    # the compartment degradation and binding already live in network_rhs
    A = channel_operator(mesh, p.gamma_X, reservoir_decay=False).tocoo()
    size = lay.size + 2 * n
    rows, cols, vals = [], [], []
    for k, (left, right) in enumerate(((lay.X_index(0), lay.X_index(1)),
                                       (lay.Y_index(0), lay.Y_index(1)))):
        base = lay.size + k * n
        idx = np.concatenate([[left], base + np.arange(n), [right]])
        rows.append(idx[A.row])
        cols.append(idx[A.col])
        vals.append(A.data)
    G = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(size, size))
    return CoupledModel(net, mesh, G)


def integrate_coupled(model: CoupledModel, t_end: float,
                      controls: IntegratorControls = IntegratorControls(), seed=None) -> Trajectory:
    y0 = np.zeros(model.G.shape[0])
    y0[: model.n_net] = seeded_initial_state(model.net, seed)
    up = np.full(y0.size, np.inf)
    up[: model.n_net] = network_caps(model.net)
    labels = model.net.labels() + [f"ch{i}:X" for i in range(model.mesh.n_cells)] \
        + [f"ch{i}:Y" for i in range(model.mesh.n_cells)]
    return integrate_system(model.rhs, model.jacobian, y0, t_end, controls, upper=up,
                            labels=labels, layout=model.net.layout)


OBSERVABLES = ("A1:R_A", "B1:R_B", "A1:p_I", "B1:p_I", "A1:X", "B1:Y")


@dataclass
class ComparisonReport:
    l12: float
    width: float
    factor: float
    correction: str
    ode_final: dict
    pde_final: dict
    rel_diff: dict
    tau_ode_h: float
    tau_pde_h: float
    both_patterned: bool
    same_winner: bool
    n_cells: int
    extra: dict = field(default_factory=dict)

    @property
    def tau_ratio(self) -> float:
        return self.tau_pde_h / self.tau_ode_h

    @property
    def max_rel_diff(self) -> float:
        return max(self.rel_diff.values())

    def to_dict(self) -> dict:
        return {
            "l12_um": self.l12 * 1e6, "width_um": self.width * 1e6, "correction_factor": self.factor,
            "correction": self.correction,
            "n_cells": self.n_cells, "ode_final": self.ode_final, "pde_final": self.pde_final,
            "rel_diff": self.rel_diff, "max_rel_diff": self.max_rel_diff,
            "tau_ode_h": self.tau_ode_h, "tau_pde_h": self.tau_pde_h, "tau_ratio": self.tau_ratio,
            "both_patterned": self.both_patterned, "same_winner": self.same_winner,
        }


def _contrast(final: dict) -> tuple[bool, bool]:
    """(contrasting, A wins) from final synthase levels."""
    a, b = final["A1:p_I"], final["B1:p_I"]
    hi, lo = max(a, b), min(a, b)
    return hi > 10 * lo, a > b


def compare_models(p: ParameterSet, l12: float, t_end: float = 400 * HOUR, width_factor: float = 1.0,
                   n_cells: int = 100, correction: str = "two_port", observable: str = "A1:R_A",
                   controls: IntegratorControls = IntegratorControls()) -> ComparisonReport:
    """Simulate the two-compartment network both as a compartmental ODE and
    with explicit channels, from the same seeded initial state."""
    if not 0 < l12 <= MAX_COMPARE_LENGTH:
        raise DomainError(f"comparison defined for 0 < l12 <= {MAX_COMPARE_LENGTH} m")
    g = two_compartment(l12, width_factor=width_factor)
    factor = _attenuation(p, l12, g.diffusivity)[0] if correction != "none" else 1.0
    ode_net = Network(corrected_laplacian(g, p, correction), 1, 1, p, order=tuple(g.order))
    ode = integrate(seeded_initial_state(ode_net), ode_net, t_end, controls)
    model = coupled_model(p, l12, width_factor, n_cells)
    pde = integrate_coupled(model, t_end, controls)
    for name, tr in (("ODE", ode), ("PDE", pde)):
        if not tr.steady:
            raise NotConverged(f"{name} model did not reach steady state within {t_end / HOUR:g} h")
    ode_final = {o: float(ode.final[ode.labels.index(o)]) for o in OBSERVABLES}
    pde_final = {o: float(pde.final[pde.labels.index(o)]) for o in OBSERVABLES}
    rel = {o: abs(pde_final[o] - ode_final[o]) / max(abs(pde_final[o]), abs(ode_final[o]))
           for o in OBSERVABLES}
    (c_o, w_o), (c_p, w_p) = _contrast(ode_final), _contrast(pde_final)
    return ComparisonReport(
        l12, model.mesh.width, factor, correction, ode_final, pde_final, rel,
        estimate_time_constant(ode, observable), estimate_time_constant(pde, observable),
        c_o and c_p, w_o == w_p, n_cells,
    )
