"""Reduced scalar maps, their fixed points, and the linear checks that tie the
slope of the reduced map to stability of the full network.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import LaplacianPair
from .kinetics import cell_map, cell_steady_state
from .maps import StaticMap
from .network import Network, network_jacobian
from .params import ParameterSet
from .transceiver import (
    dc_gain,
    transceiver_jacobian,
    transceiver_map,
    transceiver_steady_state,
)

MARGINAL_BAND = 1e-6
SCAN_POINTS = 4096
SCAN_FLOOR = 1e-15  # M
DEDUP_REL = 1e-3


@dataclass(frozen=True)
class ReducedSystem:
    """The four scalar maps of an equitable two-class network."""

    T_A: StaticMap
    T_B: StaticMap
    T_AB: StaticMap
    T_BA: StaticMap
    z_max: float

    @property
    def Tbar_A(self) -> StaticMap:
        return self.T_AB.then(self.T_B).then(self.T_BA).then(self.T_A)

    @property
    def Tbar_B(self) -> StaticMap:
        return self.T_BA.then(self.T_A).then(self.T_AB).then(self.T_B)

    def partner(self, z_A):
        """B-class value paired with an A-class fixed point."""
        return self.T_B(self.T_AB(z_A))

    def slope(self, z_A):
        """T'_AB(z_A) T'_B(T_AB(z_A)) T'_BA(z_B) T'_A(T_BA(z_B))."""
        r_b = self.T_AB(z_A)
        z_b = self.T_B(r_b)
        r_a = self.T_BA(z_b)
        return (self.T_AB.derivative(z_A) * self.T_B.derivative(r_b)
                * self.T_BA.derivative(z_b) * self.T_A.derivative(r_a))


def compose_Tbar(p: ParameterSet, d_AB: float, d_BA: float,
                 p_B: ParameterSet | None = None) -> ReducedSystem:
    """Reduced system for quotient weights ``d_AB`` (A into B) and ``d_BA``."""
    p_B = p_B or p
    p_AB = p if p_B is p else p.replace(k_on=p_B.k_on, k_off=p_B.k_off, p_Ri=p_B.p_Ri)
    p_BA = p_B if p_B is p else p_B.replace(k_on=p.k_on, k_off=p.k_off, p_Ri=p.p_Ri)
    return ReducedSystem(
        T_A=cell_map(p),
        T_B=cell_map(p_B),
        T_AB=transceiver_map(d_AB, d_BA, p_AB),
        T_BA=transceiver_map(d_BA, d_AB, p_BA),
        z_max=1.01 * p.output_bound,
    )


def reduced_system(pair: LaplacianPair, p: ParameterSet, p_B: ParameterSet | None = None) -> ReducedSystem:
    return compose_Tbar(p, pair.d_AB, pair.d_BA, p_B)


@dataclass(frozen=True)
class FixedPoint:
    z_A: float
    z_B: float
    slope: float
    label: str  # "stable" | "unstable" | "marginal"


@dataclass(frozen=True)
class FixedPointReport:
    points: tuple[FixedPoint, ...]
    bracket: tuple[float, float]
    is_patterned: bool
    marginal: bool = False

    @property
    def middle(self) -> FixedPoint:
        return self.points[len(self.points) // 2]

    def to_dict(self) -> dict:
        return {
            "points": [asdict(pt) for pt in self.points],
            "bracket": list(self.bracket),
            "is_patterned": self.is_patterned,
            "marginal": self.marginal,
            "classification": classify_patterning(self)[0],
        }


def label_slope(slope: float, band: float = MARGINAL_BAND) -> str:
    if slope > 1.0 + band:
        return "unstable"
    if slope < 1.0 - band:
        return "stable"
    return "marginal"


def scan_grid(z_max: float, n: int = SCAN_POINTS, floor: float = SCAN_FLOOR) -> np.ndarray:
    """Log-spaced points from ``floor`` to ``z_max`` plus a linear fill near zero."""
    n_lin = n // 16
    lin = np.linspace(0.0, floor * 10, n_lin, endpoint=False)
    log = np.geomspace(floor, z_max, n - n_lin)
    return np.unique(np.concatenate([lin, log]))


def _bisect(g, lo: np.ndarray, hi: np.ndarray, g_lo: np.ndarray, iters: int = 200) -> np.ndarray:
    """Vectorized bisection on brackets with g(lo) and g(hi) of opposite sign.

    Runs until each bracket is a couple of ulps wide (or 1e-30 M near zero),
    which is far inside the 1e-18 M interval target.
    """
    lo, hi, g_lo = lo.copy(), hi.copy(), g_lo.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.all((hi - lo) <= np.maximum(1e-30, 4 * np.spacing(np.abs(mid)))):
            break
        g_mid = g(mid)
        same = np.sign(g_mid) == np.sign(g_lo)
        lo = np.where(same, mid, lo)
        g_lo = np.where(same, g_mid, g_lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def find_fixed_points(system: ReducedSystem, z_max: float | None = None,
                      n_scan: int = SCAN_POINTS) -> FixedPointReport:
    """Every fixed point of T̄_A that a dense scan resolves, sorted ascending.

    Sign changes of T̄_A(z) - z on the scan grid are refined by bisection to
    machine precision; roots closer than 1e-3 relative are merged.
    """
    z_max = system.z_max if z_max is None else z_max
    if not z_max > 0:
        raise ValueError("empty bracket")
    Tbar = system.Tbar_A

    def g(z):
        return Tbar(z) - z

    grid = scan_grid(z_max, n_scan)
    gv = g(grid)
    exact = grid[gv == 0.0]
    s = np.sign(gv)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    roots = _bisect(g, grid[idx], grid[idx + 1], gv[idx]) if idx.size else np.empty(0)
    roots = np.sort(np.concatenate([roots, exact]))
    assert roots.size > 0, "a bounded increasing map on [0, z_max] must cross the diagonal"
    merged = [roots[0]]
    for r in roots[1:]:
        if abs(r - merged[-1]) > DEDUP_REL * max(abs(r), abs(merged[-1])):
            merged.append(r)
    z = np.array(merged)
    slopes = system.slope(z)
    z_b = system.partner(z)
    points = tuple(
        FixedPoint(float(a), float(b), float(sl), label_slope(float(sl)))
        for a, b, sl in zip(z, z_b, slopes)
    )
    mid = points[len(points) // 2]
    patterned = len(points) >= 3 and mid.label == "unstable"
    marginal = any(pt.label == "marginal" for pt in points)
    return FixedPointReport(points, (0.0, float(z_max)), patterned, marginal)


def classify_patterning(report: FixedPointReport) -> tuple[str, bool]:
    """("patterned" | "homogeneous", marginal flag).

    Patterned requires at least three fixed points with the middle
    (near-homogeneous) one strictly above slope 1; a middle slope inside the
    marginal band counts as homogeneous but is flagged.
    """
    mid = report.middle
    flagged = report.marginal or mid.label == "marginal"
    if len(report.points) >= 3 and mid.label == "unstable":
        return "patterned", flagged
    return "homogeneous", flagged


def crossing_pattern_holds(report: FixedPointReport) -> bool:
    """Outer fixed points are contrasting: one has A above and B below the
    middle point, the other the reverse."""
    if len(report.points) < 3:
        return False
    mid = report.middle
    lo, hi = report.points[0], report.points[-1]
    return hi.z_A > mid.z_A and hi.z_B < mid.z_B and lo.z_A < mid.z_A and lo.z_B > mid.z_B


# ---------------------------------------------------------------------------
# full-network linear checks


def assemble_steady_state(net: Network, z_A: float) -> np.ndarray:
    """Network equilibrium with every A compartment holding synthase ``z_A``.

    Built block by block from the static maps, so it is an equilibrium of
    the full network whenever ``z_A`` is a fixed point of the reduced map on
    an equitable network.
    """
    lay = net.layout
    y = np.zeros(lay.size)
    pI_A = np.full(lay.n_A, float(z_A))
    tx_ab = transceiver_steady_state(pI_A, net.L, net.p_AB)
    y[lay.tx_AB] = tx_ab.as_vector()
    cells_B = cell_steady_state(tx_ab.R_recv, net.pB)
    y[lay.cell_B] = cells_B.T.ravel()
    tx_ba = transceiver_steady_state(cells_B[:, 3], net.L_Y, net.p_BA)
    y[lay.tx_BA] = tx_ba.as_vector()
    cells_A = cell_steady_state(tx_ba.R_recv, net.params_A)
    # keep the synthase at the requested level so the X block stays consistent
    cells_A[:, 3] = z_A
    y[lay.cell_A] = cells_A.T.ravel()
    return y


def full_jacobian(net: Network, state: np.ndarray) -> np.ndarray:
    """Linearization of the whole network at ``state`` (block order cell_A, tx_AB, cell_B, tx_BA)."""
    state = np.asarray(state, dtype=float)
    if state.shape != (net.layout.size,):
        raise ValueError(f"state has shape {state.shape}, expected ({net.layout.size},)")
    return network_jacobian(state, net)


def max_real_eigenvalue(J: np.ndarray) -> float:
    return float(np.max(np.linalg.eigvals(J).real))


def block_structure(net: Network) -> dict[tuple[int, int], bool]:
    """Which of the 4x4 blocks may be nonzero."""
    allowed = {(0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (1, 0), (2, 1), (3, 2)}
    return {(i, j): (i, j) in allowed for i in range(4) for j in range(4)}


def block_slices(net: Network) -> list[slice]:
    lay = net.layout
    return [lay.cell_A, lay.tx_AB, lay.cell_B, lay.tx_BA]


@dataclass(frozen=True)
class QuotientEigenReport:
    scalar: float  # T'_AB * T'_BA from the 3x3 quotient blocks
    scalar_from_maps: float  # same product from the closed-form derivatives
    eigenvalues: np.ndarray
    residual: float  # ||M 1 - scalar 1||_inf / scalar
    spectral_radius: float
    is_eigenvalue: bool
    is_largest: bool
    is_positive: bool
    tol: float = 1e-10
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.is_eigenvalue and self.is_largest and self.is_positive


def _quotient_blocks(Lbar: np.ndarray, X_r: float, R_r: float, p: ParameterSet):
    """3x3 quotient linearization of a transceiver (sender, receiver, complex)."""
    A = np.zeros((3, 3))
    A[:2, :2] = Lbar - p.gamma_X * np.eye(2)
    A[1, 1] -= p.k_on * (p.p_Ri - R_r)
    A[1, 2] += p.k_on * X_r + p.k_off
    A[2, 1] += p.k_on * (p.p_Ri - R_r)
    A[2, 2] -= p.k_on * X_r + p.k_off
    B = np.array([[p.nu], [0.0], [0.0]])
    C = np.array([[0.0, 0.0, 1.0]])
    return A, B, C


def composed_dc_gain(net: Network, state: np.ndarray) -> np.ndarray:
    """(C_BA A_BA^-1 B_BA)(C_AB A_AB^-1 B_AB), an N_A x N_A nonnegative matrix."""
    lay = net.layout
    G_AB = dc_gain(*transceiver_jacobian(state[lay.tx_AB], net.L, net.p_AB, lay.n_A))
    G_BA = dc_gain(*transceiver_jacobian(state[lay.tx_BA], net.L_Y, net.p_BA, lay.n_B))
    return G_BA @ G_AB


def verify_quotient_eigenvalue(net: Network, pair: LaplacianPair, z_A: float,
                               tol: float = 1e-10) -> QuotientEigenReport:
    """Check that the quotient slope product is the Perron eigenvalue of the
    composed transceiver dc-gain, with eigenvector of all ones."""
    lay = net.layout
    state = assemble_steady_state(net, z_A)
    M = composed_dc_gain(net, state)

    X_ab = state[lay.tx_AB]
    X_ba = state[lay.tx_BA]
    # homogeneous receiver values (identical across a class on equitable graphs)
    xr_b, rr_b = X_ab[lay.n_A], X_ab[lay.N]
    xr_a, rr_a = X_ba[lay.n_B], X_ba[lay.N]
    Lbar_ab = pair.Lbar
    Lbar_ba = pair.Lbar[::-1, ::-1]
    g_ab = float(dc_gain(*_quotient_blocks(Lbar_ab, xr_b, rr_b, net.p_AB))[0, 0])
    g_ba = float(dc_gain(*_quotient_blocks(Lbar_ba, xr_a, rr_a, net.p_BA))[0, 0])
    scalar = g_ab * g_ba

    red = reduced_system(pair, net.params_A, net.params_B)
    z_B = float(state[lay.p_I_B()][0])
    from_maps = float(red.T_AB.derivative(z_A) * red.T_BA.derivative(z_B))

    ones = np.ones(lay.n_A)
    residual = float(np.max(np.abs(M @ ones - scalar * ones)) / abs(scalar))
    eig = np.linalg.eigvals(M)
    rho = float(np.max(np.abs(eig)))
    is_largest = abs(rho - scalar) <= tol * max(rho, abs(scalar)) + 1e-15 * rho
    return QuotientEigenReport(
        scalar=scalar,
        scalar_from_maps=from_maps,
        eigenvalues=eig,
        residual=residual,
        spectral_radius=rho,
        is_eigenvalue=residual < tol,
        is_largest=bool(is_largest or rho <= scalar * (1 + tol)),
        is_positive=scalar > 0,
        tol=tol,
        details={"nonnegative": bool(np.all(M >= -1e-15 * np.abs(M).max())),
                 "zero_rows": int(np.sum(np.all(M == 0, axis=1)))},
    )
