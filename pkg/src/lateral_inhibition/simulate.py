"""Time integration of the network (and of isolated blocks) with nonnegativity
projection, steady-state detection and time-constant estimation."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .kinetics import _cell_rhs, cell_jacobian
from .network import Network, NetworkLayout, NetworkState, network_jacobian, network_rhs
from .params import ParameterSet
from .transceiver import _rhs as _tx_rhs
from .transceiver import transceiver_jacobian

log = logging.getLogger(__name__)

HOUR = 3600.0
SEED_CONCENTRATION = 1e-12  # M, synthase seed that breaks the A/B symmetry


class StiffnessError(RuntimeError):
    pass


class NotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorControls:
    rtol: float = 1e-8
    atol: float = 1e-14  # M
    method: str = "BDF"
    sample_dt: float = 0.25 * HOUR
    steady_tol: float = 1e-10  # 1/s, on |dy/dt| / max(|y|, steady_floor)
    steady_floor: float = 1e-12  # M
    steady_window: float = HOUR
    projection_interval: float = 24 * HOUR
    clamp_warn: float = 1e-6  # relative violation that triggers a warning


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray  # s
    y: np.ndarray  # (n_samples, dim)
    labels: tuple[str, ...]
    steady: bool
    projection_total: float = 0.0  # summed magnitude of clipped values (M)
    projection_max: float = 0.0
    layout: NetworkLayout | None = None
    n_rhs: int = 0

    @property
    def t_hours(self) -> np.ndarray:
        return self.t / HOUR

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]

    def column(self, observable: str | int | Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        if callable(observable):
            return np.asarray(observable(self.y))
        if isinstance(observable, str):
            return self.y[:, self.labels.index(observable)]
        return self.y[:, observable]

    def state(self, k: int = -1) -> NetworkState:
        return NetworkState(self.y[k], self.layout)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_h", *self.labels])
            for ti, row in zip(self.t_hours, self.y):
                w.writerow([f"{ti:.10g}", *(f"{v:.12g}" for v in row)])


def _scaled_rate(f: np.ndarray, y: np.ndarray, floor: float) -> float:
    return float(np.max(np.abs(f) / np.maximum(np.abs(y), floor)))


def integrate_system(fun: Callable[[np.ndarray], np.ndarray],
                     jac: Callable[[np.ndarray], np.ndarray] | None,
                     y0, t_end: float, controls: IntegratorControls = IntegratorControls(),
                     upper: np.ndarray | None = None, labels: Sequence[str] = (),
                     layout: NetworkLayout | None = None, jac_sparsity=None) -> Trajectory:
    """Integrate an autonomous system sample by sample.

    The solver restarts every ``projection_interval``; at each restart the
    state is projected onto ``0 <= y <= upper`` and the clipped amount is
    accounted. Emitted samples are clipped the same way. The integrator
    itself is scipy's adaptive implicit BDF by default (the network is stiff:
    binding relaxes at ~1e3/s while the slow modes sit near 1e-4/s).
    """
    y = np.asarray(y0, dtype=float).copy()
    if np.any(y < 0):
        raise ValueError("initial state must be nonnegative")
    n_samples = int(np.ceil(t_end / controls.sample_dt - 1e-9)) + 1
    ts = np.minimum(np.arange(n_samples) * controls.sample_dt, t_end)
    Y = np.empty((n_samples, y.size))
    Y[0] = y
    acc = [0.0, 0.0]  # total, worst
    n_rhs = 0
    h = None
    f_ivp = lambda t, x: fun(x)  # noqa: E731
    kw = {}
    if controls.method in ("BDF", "Radau", "LSODA"):
        if jac is not None:
            kw["jac"] = lambda t, x: jac(x)
        elif jac_sparsity is not None:
            kw["jac_sparsity"] = jac_sparsity

    def project(x):
        clipped = np.clip(x, 0.0, upper) if upper is not None else np.maximum(x, 0.0)
        gap = np.abs(clipped - x)
        if gap.any():
            acc[0] += float(gap.sum())
            acc[1] = max(acc[1], float(gap.max()))
            if upper is not None and np.any(x - upper > controls.clamp_warn * upper):
                warnings.warn(f"state exceeded its cap by {np.max(x - upper):.3g}; clamped",
                              RuntimeWarning)
        return clipped

    # one solver run per projection segment; samples come from t_eval
    k = 1
    while k < n_samples:
        t0 = ts[k - 1]
        k_end = min(n_samples - 1, int(np.searchsorted(ts, t0 + controls.projection_interval, "right")) - 1)
        k_end = max(k_end, k)
        if h is not None:
            kw["first_step"] = min(h, ts[k_end] - t0)
        sol = solve_ivp(f_ivp, (t0, ts[k_end]), y, method=controls.method, rtol=controls.rtol,
                        atol=controls.atol, t_eval=ts[k:k_end + 1], **kw)
        n_rhs += sol.nfev
        if sol.status == 0 and not np.isfinite(sol.y).all():
            sol.status, sol.message = -1, "non-finite state"
        if sol.status != 0:
            raise StiffnessError(
                f"integration failed near t={ts[k - 1] / HOUR:.4g} h ({sol.message}); "
                "loosen rtol/atol or switch to an implicit method"
            )
        if sol.t.size >= 2:
            h = float(sol.t[-1] - sol.t[-2])
        for j in range(sol.y.shape[1] - 1):
            Y[k + j] = np.clip(sol.y[:, j], 0.0, upper) if upper is not None else np.maximum(sol.y[:, j], 0.0)
        y = project(sol.y[:, -1])
        Y[k_end] = y
        k = k_end + 1
    total, worst = acc

    window = ts >= ts[-1] - controls.steady_window
    steady = n_samples > 1 and all(
        _scaled_rate(fun(Y[k]), Y[k], controls.steady_floor) < controls.steady_tol
        for k in np.nonzero(window)[0]
    )
    return Trajectory(ts, Y, tuple(labels), bool(steady), total, worst, layout, n_rhs)


def network_caps(net: Network) -> np.ndarray:
    """Upper bounds for projection: complexes cannot exceed total receptor."""
    lay = net.layout
    up = np.full(lay.size, np.inf)
    up[lay.R_B()] = net.pB.p_Ri
    up[lay.R_A()] = net.params_A.p_Ri
    return up


def integrate(st0, net: Network, t_end: float,
              controls: IntegratorControls = IntegratorControls()) -> Trajectory:
    """Integrate the full network from ``st0`` for ``t_end`` seconds."""
    y0 = np.asarray(st0.y if isinstance(st0, NetworkState) else st0, dtype=float)
    if y0.shape != (net.layout.size,):
        raise ValueError(f"state has shape {y0.shape}, expected ({net.layout.size},)")
    return integrate_system(
        lambda y: network_rhs(y, net), lambda y: network_jacobian(y, net), y0, t_end,
        controls, upper=network_caps(net), labels=net.labels(), layout=net.layout,
    )


def seeded_initial_state(net: Network, seed: int | None = None,
                         amplitude: float = SEED_CONCENTRATION) -> np.ndarray:
    """All-zero state with a tiny synthase perturbation.

    Without a seed the first A compartment gets ``amplitude``; with a seed
    every compartment's synthase gets ``amplitude * U(0, 1)``.
    """
    lay = net.layout
    y = np.zeros(lay.size)
    if seed is None:
        y[lay.p_I_A()[0]] = amplitude
    else:
        rng = np.random.default_rng(seed)
        idx = np.concatenate([lay.p_I_A(), lay.p_I_B()])
        y[idx] = amplitude * rng.uniform(size=idx.size)
    return y


def estimate_time_constant(traj: Trajectory, observable, noise_rel: float = 1e-6) -> float:
    """Time constant (hours) of the final monotone approach to steady state.

    Fits log|obs(t) - obs(end)| by least squares from the last turning point
    of the observable to the last sample still above the noise floor
    ``noise_rel * max|obs|``, and returns -1/slope.
    """
    if not traj.steady:
        raise NotConverged("trajectory has not reached steady state")
    obs = traj.column(observable)
    t = traj.t
    final = obs[-1]
    err = np.abs(obs - final)
    floor = noise_rel * max(np.max(np.abs(obs)), np.finfo(float).tiny)
    above = np.nonzero(err > floor)[0]
    if above.size < 3:
        raise ValueError("observable shows no decay segment")
    end = above[-1]
    nz = np.nonzero(np.diff(obs[: end + 1]))[0]
    steps = np.sign(np.diff(obs[: end + 1]))[nz]
    turns = nz[1:][steps[1:] != steps[:-1]]
    start = int(turns[-1]) if turns.size else 0
    seg = slice(start, end + 1)
    if end + 1 - start < 3:
        raise ValueError("final approach segment too short to fit")
    slope = np.polyfit(t[seg], np.log(err[seg]), 1)[0]
    if not slope < 0:
        raise ValueError("observable is not decaying toward its final value")
    return float(-1.0 / slope / HOUR)


# ---------------------------------------------------------------------------
# order preservation


@dataclass
class MonotonicityReport:
    passed: bool
    n_pairs: int
    worst: float = 0.0  # most negative scaled ordering margin seen
    failures: list = field(default_factory=list)


def is_ordered(x, x_hat, signs, tol: float = 0.0) -> bool:
    return bool(np.all(signs * (np.asarray(x_hat) - np.asarray(x)) >= -tol))


def _check_pairs(trajs, signs, controls: IntegratorControls, report: MonotonicityReport, k: int):
    lo, hi = trajs
    diff = signs * (hi.y - lo.y)
    slack = 10 * (controls.atol + controls.rtol * np.maximum(np.abs(lo.y), np.abs(hi.y)))
    margin = diff / np.maximum(slack, 1e-300)
    worst = float(np.min(np.minimum(margin, 0.0)))
    report.worst = min(report.worst, worst)
    if np.any(diff < -slack):
        i, j = np.unravel_index(np.argmin(diff + slack), diff.shape)
        report.failures.append({"pair": k, "t_h": float(lo.t[i] / HOUR), "component": int(j),
                                "violation": float(-diff[i, j])})


def monotonicity_probe(net: Network, pairs, t_end: float,
                       controls: IntegratorControls = IntegratorControls()) -> MonotonicityReport:
    """Integrate ordered initial pairs and check the cone ordering persists.

    Each pair ``(x, x_hat)`` must satisfy ``x <= x_hat`` in the network cone
    (see :meth:`NetworkLayout.cone_signs`); otherwise ValueError.
    """
    signs = net.layout.cone_signs()
    pairs = list(pairs)
    for k, (x, xh) in enumerate(pairs):
        if not is_ordered(x, xh, signs):
            raise ValueError(f"pair {k} is not ordered in the network cone")
    report = MonotonicityReport(True, len(pairs))
    for k, (x, xh) in enumerate(pairs):
        trajs = [integrate(v, net, t_end, controls) for v in (x, xh)]
        _check_pairs(trajs, signs, controls, report, k)
    report.passed = not report.failures
    return report


CELL_CONE = np.array([1.0, 1.0, -1.0, -1.0])


def integrate_cell(s0, R: float, p: ParameterSet, t_end: float,
                   controls: IntegratorControls = IntegratorControls()) -> Trajectory:
    """One cell under a held receptor complex level."""
    return integrate_system(lambda x: _cell_rhs(x, R, p), lambda x: cell_jacobian(x, R, p)[0],
                            s0, t_end, controls, labels=("m_T", "p_T", "m_I", "p_I"))


def cell_monotonicity_probe(p: ParameterSet, cases, t_end: float,
                            controls: IntegratorControls = IntegratorControls()) -> MonotonicityReport:
    """``cases`` holds ``(s0, s0_hat, R, R_hat)`` with ``R <= R_hat`` and
    ``s0 <= s0_hat`` in the cone (+, +, -, -)."""
    cases = list(cases)
    report = MonotonicityReport(True, len(cases))
    for k, (s, sh, R, Rh) in enumerate(cases):
        if R > Rh or not is_ordered(s, sh, CELL_CONE):
            raise ValueError(f"case {k} is not ordered")
        trajs = [integrate_cell(s, R, p, t_end, controls), integrate_cell(sh, Rh, p, t_end, controls)]
        _check_pairs(trajs, CELL_CONE, controls, report, k)
    report.passed = not report.failures
    return report


def integrate_transceiver(v0, p_I, L: np.ndarray, n_send: int, p: ParameterSet, t_end: float,
                          controls: IntegratorControls = IntegratorControls()) -> Trajectory:
    p_I = np.asarray(p_I, dtype=float)
    N = L.shape[0]
    up = np.full(2 * N - n_send, np.inf)
    up[N:] = p.p_Ri
    return integrate_system(lambda v: _tx_rhs(v, p_I, L, n_send, p),
                            lambda v: transceiver_jacobian(v, L, p, n_send)[0],
                            v0, t_end, controls, upper=up)


def transceiver_monotonicity_probe(L: np.ndarray, n_send: int, p: ParameterSet, cases, t_end: float,
                                   controls: IntegratorControls = IntegratorControls()) -> MonotonicityReport:
    """``cases`` holds ``(v0, v0_hat, p_I, p_I_hat)``, all ordered componentwise."""
    cases = list(cases)
    report = MonotonicityReport(True, len(cases))
    dim = 2 * L.shape[0] - n_send
    signs = np.ones(dim)
    for k, (v, vh, u, uh) in enumerate(cases):
        if not (is_ordered(v, vh, signs) and is_ordered(u, uh, np.ones(n_send))):
            raise ValueError(f"case {k} is not ordered")
        trajs = [integrate_transceiver(v, u, L, n_send, p, t_end, controls),
                 integrate_transceiver(vh, uh, L, n_send, p, t_end, controls)]
        _check_pairs(trajs, signs, controls, report, k)
    report.passed = not report.failures
    return report
