"""Reproducibility checks bundled for the ``validate`` command."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .graph import CompartmentGraph, NotEquitable, check_equitable
from .network import Network
from .params import ParameterSet
from .patterning import (
    MARGINAL_BAND,
    FixedPointReport,
    assemble_steady_state,
    find_fixed_points,
    full_jacobian,
    max_real_eigenvalue,
    reduced_system,
    verify_quotient_eigenvalue,
)
from .transceiver import contraction_check

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConcordanceRow:
    z_A: float
    slope: float
    max_eig: float  # 1/s
    excluded: bool  # slope inside the marginal band
    agrees: bool


def stability_concordance(net: Network, report: FixedPointReport,
                          band: float = MARGINAL_BAND) -> list[ConcordanceRow]:
    """sign(slope - 1) against sign(max Re eig) of the full Jacobian at every
    fixed point of the reduced map."""
    rows = []
    for pt in report.points:
        J = full_jacobian(net, assemble_steady_state(net, pt.z_A))
        lam = max_real_eigenvalue(J)
        excluded = bool(abs(pt.slope - 1.0) <= band)
        rows.append(ConcordanceRow(pt.z_A, pt.slope, lam, excluded,
                                   excluded or bool(np.sign(pt.slope - 1.0) == np.sign(lam))))
    return rows


def random_transceiver_states(L: np.ndarray, n_send: int, p: ParameterSet, count: int,
                              rng: np.random.Generator, x_max: float = 1e-6) -> np.ndarray:
    """Feasible states: X log-uniform in [1e-15, x_max] M, R uniform in [0, p_Ri)."""
    N = L.shape[0]
    X = np.exp(rng.uniform(np.log(1e-15), np.log(x_max), size=(count, N)))
    R = rng.uniform(0.0, 1.0, size=(count, N - n_send)) * p.p_Ri * (1 - 1e-9)
    return np.hstack([X, R])


@dataclass
class Check:
    name: str
    status: str  # pass | fail | skipped
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail}


def run_validation(graph: CompartmentGraph, p: ParameterSet, p_B: ParameterSet | None = None,
                   seed: int | None = None, random_states: int = 100, compare_pde: bool = True,
                   pde_cells: int = 100, t_end: float = 400 * 3600.0) -> list[Check]:
    checks: list[Check] = []
    net = Network.from_graph(graph, p, p_B)
    try:
        pair = check_equitable(graph)
    except NotEquitable as exc:
        reason = str(exc)
        log.warning("quotient checks skipped: %s", reason)
        for name in ("quotient_eigenvalue", "stability_concordance"):
            checks.append(Check(name, "skipped", {"reason": reason}))
        pair = None

    if pair is not None:
        report = find_fixed_points(reduced_system(pair, p, p_B))
        q = verify_quotient_eigenvalue(net, pair, report.middle.z_A)
        checks.append(Check("quotient_eigenvalue", "pass" if q.passed else "fail", {
            "z_A": report.middle.z_A, "scalar": q.scalar, "scalar_from_maps": q.scalar_from_maps,
            "residual": q.residual, "spectral_radius": q.spectral_radius,
        }))
        rows = stability_concordance(net, report)
        ok = all(r.agrees for r in rows)
        checks.append(Check("stability_concordance", "pass" if ok else "fail", {
            "fixed_points": [{"z_A": r.z_A, "slope": r.slope, "max_eig": r.max_eig,
                              "excluded": r.excluded, "agrees": r.agrees} for r in rows],
        }))

    rng = np.random.default_rng(seed)
    lay = net.layout
    worst = -np.inf
    failures = 0
    for L, n_send, pp in ((net.L, lay.n_A, net.p_AB), (net.L_Y, lay.n_B, net.p_BA)):
        for v in random_transceiver_states(L, n_send, pp, random_states, rng):
            mu = contraction_check(v, L, pp, n_send, strict=False).measure
            worst = max(worst, mu)
            failures += mu >= 0
    checks.append(Check("transceiver_contraction", "pass" if failures == 0 else "fail",
                        {"states": 2 * random_states, "max_measure": float(worst), "failures": int(failures)}))

    if not compare_pde:
        checks.append(Check("ode_pde_comparison", "skipped", {"reason": "disabled in config"}))
    elif graph.n_A != 1 or graph.n_B != 1 or len(graph.channels) != 1:
        checks.append(Check("ode_pde_comparison", "skipped", {"reason": "needs a two-compartment graph"}))
    elif p_B is not None:
        checks.append(Check("ode_pde_comparison", "skipped", {"reason": "needs identical A/B parameters"}))
    else:
        from .channel1d import compare_models

        ch = graph.channels[0]
        try:
            r = compare_models(p, ch.length, t_end, ch.length / graph.channel_width(ch), pde_cells)
            ok = r.both_patterned and r.same_winner and r.max_rel_diff < 0.1 and 0.6 <= r.tau_ratio <= 1.2
            checks.append(Check("ode_pde_comparison", "pass" if ok else "fail", r.to_dict()))
        except Exception as exc:  # noqa: BLE001 - reported as a failed check
            checks.append(Check("ode_pde_comparison", "fail", {"error": f"{type(exc).__name__}: {exc}"}))
    return checks
