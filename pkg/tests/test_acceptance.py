"""Acceptance criteria 1-9. One summary line per criterion is printed at the
end of the run (see conftest.py)."""

import time

import numpy as np
import pytest

import oracles
from lateral_inhibition.channel1d import (
    ChannelMesh,
    ChannelState,
    compare_models,
    mass,
    step_pde,
    steady_profile_fixed_fixed,
    steady_profile_fixed_wall,
)
from lateral_inhibition.graph import build_laplacian, check_equitable, edge_weight, parallelogram, two_compartment
from lateral_inhibition.kinetics import cell_steady_state, static_map_T, static_map_T_prime
from lateral_inhibition.network import Network
from lateral_inhibition.params import ParameterSet, perturbed
from lateral_inhibition.patterning import (
    assemble_steady_state,
    compose_Tbar,
    find_fixed_points,
    reduced_system,
    verify_quotient_eigenvalue,
)
from lateral_inhibition.simulate import (
    CELL_CONE,
    HOUR,
    cell_monotonicity_probe,
    estimate_time_constant,
    integrate,
    integrate_cell,
    integrate_transceiver,
    monotonicity_probe,
    network_caps,
    seeded_initial_state,
    transceiver_monotonicity_probe,
)
from lateral_inhibition.sweep import (
    DEFAULT_L12,
    DEFAULT_N,
    DEFAULT_P_RI,
    HOMOGENEOUS,
    PATTERNED,
    axis,
    length_cap,
    run_sweep,
)
from lateral_inhibition.transceiver import (
    contraction_check,
    decoupled_T_AB,
    decoupled_T_AB_prime,
    transceiver_steady_state,
)
from lateral_inhibition.validation import random_transceiver_states, stability_concordance

P = ParameterSet()  # defaults, p_Ri = 5e-7 M
L12 = 500e-6  # m, width factor k = 1
G2 = two_compartment(L12)
D500 = edge_weight(L12, L12)
TAU_TARGET_H = 22.0


@pytest.mark.criterion(1, "ODE two-compartment run: contrasting steady state, tau 22 h +/- 30%, < 10 s")
def test_criterion_1_ode_time_constant(detail):
    net = Network.from_graph(G2, P)
    t0 = time.perf_counter()
    tr = integrate(seeded_initial_state(net), net, 400 * HOUR)
    taus = {obs: estimate_time_constant(tr, obs) for obs in ("A1:R_A", "B1:R_B")}
    elapsed = time.perf_counter() - t0
    st = tr.state()
    detail(f"tau R_A = {taus['A1:R_A']:.2f} h, tau R_B = {taus['B1:R_B']:.2f} h, {elapsed:.1f} s")
    assert tr.steady
    hi, lo = max(st.p_I_A[0], st.p_I_B[0]), min(st.p_I_A[0], st.p_I_B[0])
    assert hi > 10 * lo
    assert elapsed < 10
    for obs, tau in taus.items():
        assert abs(tau - TAU_TARGET_H) <= 0.3 * TAU_TARGET_H, f"{obs}: tau = {tau:.2f} h"


@pytest.mark.criterion(2, "PDE channel vs ODE: both contrasting, tau ratio in [0.6, 1.2], states within 10%, < 2 min")
def test_criterion_2_pde_vs_ode(detail):
    t0 = time.perf_counter()
    r = compare_models(P, L12, 400 * HOUR, width_factor=1.0, n_cells=100)
    elapsed = time.perf_counter() - t0
    detail(f"tau ODE {r.tau_ode_h:.2f} h, PDE {r.tau_pde_h:.2f} h, ratio {r.tau_ratio:.3f}, "
           f"max rel diff {r.max_rel_diff:.2e}, {elapsed:.1f} s")
    assert r.both_patterned and r.same_winner
    assert 0.6 <= r.tau_ratio <= 1.2
    assert r.max_rel_diff < 0.10
    assert elapsed < 120


@pytest.mark.criterion(3, "sweep region: reference point patterned, extreme receptor rows homogeneous, "
                          "finite length cap, < 5 min at 64x64")
def test_criterion_3_sweep_region(detail):
    p_axis = axis(*DEFAULT_P_RI, DEFAULT_N, "log", [1e-12, 5e-7, 1e-3])
    l_axis = axis(*DEFAULT_L12, DEFAULT_N, "linear", [L12])
    t0 = time.perf_counter()
    grid = run_sweep(P, p_axis, l_axis, width_factor=1.0, threads=4)
    caps = {float(p): length_cap(P, float(p), l_max=10.0, n=61) for p in p_axis}
    elapsed = time.perf_counter() - t0
    n_pat = int((grid.codes == PATTERNED).sum())
    detail(f"{grid.codes.shape[0]}x{grid.codes.shape[1]} grid, {n_pat} patterned, "
           f"max finite cap {max(c for c in caps.values()):.3g} m, {elapsed:.1f} s")
    assert grid.code_at(5e-7, L12) == PATTERNED
    assert (grid.column(1e-12) == HOMOGENEOUS).all()
    assert (grid.column(1e-3) == HOMOGENEOUS).all()
    assert all(np.isfinite(c) for c in caps.values())
    assert elapsed < 300


@pytest.mark.criterion(4, "slope/eigenvalue concordance over 50 random draws, zero violations")
def test_criterion_4_stability_concordance(detail):
    rng = np.random.default_rng(2024)
    pair = check_equitable(G2)
    n_points = n_excluded = 0
    violations = []
    for k in range(50):
        p = perturbed(rng)
        net = Network.from_graph(G2, p)
        for row in stability_concordance(net, find_fixed_points(reduced_system(pair, p))):
            n_points += 1
            n_excluded += row.excluded
            if not row.agrees:
                violations.append((k, row.z_A, row.slope, row.max_eig))
    detail(f"{n_points} fixed points, {n_excluded} in marginal band, {len(violations)} violations")
    assert not violations


@pytest.mark.criterion(5, "parallelogram: quotient slope product is the Perron eigenvalue, residual < 1e-10")
def test_criterion_5_quotient_eigenvalue(detail):
    g = parallelogram(500e-6, 700e-6, 500e-6)
    pair = check_equitable(g)
    net = Network.from_graph(g, P)
    z = find_fixed_points(reduced_system(pair, P)).middle.z_A
    r = verify_quotient_eigenvalue(net, pair, z)
    detail(f"scalar {r.scalar:.6g}, spectral radius {r.spectral_radius:.6g}, residual {r.residual:.1e}")
    assert r.residual < 1e-10
    assert r.is_eigenvalue and r.is_largest and r.is_positive
    assert r.scalar == pytest.approx(r.scalar_from_maps, rel=1e-8)


@pytest.mark.criterion(6, "ODE steady states equal the static maps for 50 random parameter sets (1e-6)")
def test_criterion_6_map_ode_equivalence(detail):
    rng = np.random.default_rng(6)
    L = build_laplacian(G2)
    worst = 0.0
    for _ in range(50):
        p = perturbed(rng)
        R = float(np.exp(rng.uniform(np.log(1e-12), np.log(p.p_Ri))))
        cell = integrate_cell(np.zeros(4), R, p, 300 * HOUR)
        ref = cell_steady_state(R, p)
        assert cell.steady
        assert cell.final == pytest.approx(ref, rel=1e-6)
        assert cell.final[3] == pytest.approx(static_map_T(R, p), rel=1e-6)
        worst = max(worst, abs(cell.final[3] / static_map_T(R, p) - 1))

        p_I = np.array([np.exp(rng.uniform(np.log(1e-13), np.log(1e-8)))])
        tx = integrate_transceiver(np.zeros(3), p_I, L, 1, p, 300 * HOUR)
        st = transceiver_steady_state(p_I, L, p)
        assert tx.steady
        assert tx.final[2] == pytest.approx(st.R_recv[0], rel=1e-6)
        assert tx.final[2] == pytest.approx(decoupled_T_AB(p_I[0], D500, D500, p), rel=1e-6)
        worst = max(worst, abs(tx.final[2] / st.R_recv[0] - 1))
    detail(f"worst relative mismatch {worst:.1e}")


@pytest.mark.criterion(7, "analytic derivatives match central differences at 20 log-spaced points (1e-6)")
def test_criterion_7_derivatives(detail):
    sys_ = compose_Tbar(P, D500, D500)
    worst = 0.0

    def check(analytic, ref):
        nonlocal worst
        worst = max(worst, abs(analytic / ref - 1))
        assert analytic == pytest.approx(ref, rel=1e-6)

    for R in np.geomspace(1e-12, P.p_Ri, 20):
        check(static_map_T_prime(R, P), oracles.derivative(lambda x: oracles.T_cell(x, P), R))
    for z in np.geomspace(1e-13, 5e-9, 20):
        check(decoupled_T_AB_prime(z, D500, D500, P), oracles.derivative(lambda x: oracles.T_tx(x, D500, D500, P), z))
        check(sys_.Tbar_A.derivative(z), oracles.derivative(lambda x: oracles.Tbar_A(x, D500, D500, P), z))
    detail(f"worst relative error {worst:.1e}")


def _cone_pair(rng, base, signs, caps):
    x = base * rng.uniform(0.5, 1.5, base.size)
    x = np.minimum(x, 0.5 * caps)
    step = rng.uniform(0.0, 0.5, base.size)
    xh = np.where(signs > 0, np.minimum(x * (1 + step), caps), x * (1 - step))
    return x, xh


@pytest.mark.criterion(8, "order preserved for 20 pairs each (cells, transceivers, network); "
                          "mu_1 < 0 at 100 transceiver states")
def test_criterion_8_monotonicity(detail):
    rng = np.random.default_rng(8)
    net = Network.from_graph(G2, P)
    L = build_laplacian(G2)
    t_end = 100 * HOUR

    cell_cases = []
    for _ in range(20):
        R = float(np.exp(rng.uniform(np.log(1e-12), np.log(P.p_Ri))))
        Rh = R * rng.uniform(1.0, 3.0)
        s, sh = _cone_pair(rng, cell_steady_state(R, P), CELL_CONE, np.full(4, np.inf))
        cell_cases.append((s, sh, R, Rh))
    cells = cell_monotonicity_probe(P, cell_cases, t_end)

    tx_cases = []
    caps = np.array([np.inf, np.inf, P.p_Ri])
    for _ in range(20):
        u = np.array([np.exp(rng.uniform(np.log(1e-13), np.log(1e-8)))])
        v, vh = _cone_pair(rng, random_transceiver_states(L, 1, P, 1, rng)[0], np.ones(3), caps)
        tx_cases.append((v, vh, u, u * rng.uniform(1.0, 3.0)))
    txs = transceiver_monotonicity_probe(L, 1, P, tx_cases, t_end)

    signs = net.layout.cone_signs()
    net_caps = network_caps(net)
    points = find_fixed_points(reduced_system(check_equitable(G2), P)).points
    pairs = [_cone_pair(rng, assemble_steady_state(net, points[k % len(points)].z_A), signs, net_caps)
             for k in range(20)]
    network = monotonicity_probe(net, pairs, t_end)

    mus = [contraction_check(v, L, P, 1, strict=False).measure
           for v in random_transceiver_states(L, 1, P, 100, rng)]
    detail(f"violations cells {len(cells.failures)}, transceivers {len(txs.failures)}, "
           f"network {len(network.failures)}; max mu_1 {max(mus):.3g} 1/s")
    assert cells.passed and cells.n_pairs == 20
    assert txs.passed and txs.n_pairs == 20
    assert network.passed and network.n_pairs == 20
    assert max(mus) < 0


@pytest.mark.criterion(9, "PDE solver: cosh/sinh steady profiles within 0.1%, sealed mass conserved to 1e-10")
def test_criterion_9_pde_solver(detail):
    gamma = P.gamma_X
    mesh = ChannelMesh(2e-3, 1e-3, 400)
    wall = step_pde(ChannelState.uniform(mesh, 0.0, "fixed", "wall", c_left=1e-6), gamma, 600.0, n_steps=2000)
    err_cosh = np.max(np.abs(wall.u / steady_profile_fixed_wall(mesh.x, 1e-6, mesh.length, gamma) - 1))
    both = step_pde(ChannelState.uniform(mesh, 0.0, "fixed", "fixed", c_left=1e-6, c_right=2e-7),
                    gamma, 600.0, n_steps=2000)
    err_sinh = np.max(np.abs(both.u / steady_profile_fixed_fixed(mesh.x, 1e-6, 2e-7, mesh.length, gamma) - 1))

    sealed = ChannelState(ChannelMesh(1e-3, 1e-3, 100), np.random.default_rng(9).uniform(0, 1e-6, 102))
    out = step_pde(sealed, 0.0, 10.0, n_steps=10_000)
    drift = abs(mass(out) / mass(sealed) - 1)
    detail(f"cosh err {err_cosh:.1e}, sinh err {err_sinh:.1e}, mass drift {drift:.1e}")
    assert err_cosh < 1e-3 and err_sinh < 1e-3
    assert drift < 1e-10
