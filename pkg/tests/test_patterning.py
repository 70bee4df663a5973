import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lateral_inhibition.graph import check_equitable, edge_weight, parallelogram, two_compartment
from lateral_inhibition.maps import central_difference
from lateral_inhibition.network import Network
from lateral_inhibition.params import ParameterSet
from lateral_inhibition.patterning import (
    FixedPoint,
    FixedPointReport,
    assemble_steady_state,
    block_slices,
    block_structure,
    classify_patterning,
    compose_Tbar,
    crossing_pattern_holds,
    find_fixed_points,
    full_jacobian,
    max_real_eigenvalue,
    reduced_system,
    verify_quotient_eigenvalue,
)
from lateral_inhibition.network import network_rhs

import oracles

P = ParameterSet()
D500 = edge_weight(500e-6, 500e-6)


@pytest.fixture(scope="module")
def fig6():
    sys_ = compose_Tbar(P, D500, D500)
    return sys_, find_fixed_points(sys_)


def test_Tbar_positive_increasing_bounded(fig6):
    sys_, _ = fig6
    z = np.geomspace(1e-15, sys_.z_max, 500)
    v = sys_.Tbar_A(z)
    assert (v > 0).all()
    assert (np.diff(v) >= 0).all()
    assert v.max() <= P.output_bound


def test_symmetric_maps_identical(fig6):
    sys_, _ = fig6
    z = np.geomspace(1e-14, 1e-8, 50)
    assert np.allclose(sys_.Tbar_A(z), sys_.Tbar_B(z), rtol=1e-14)


def test_chain_rule_matches_high_precision_difference(fig6):
    sys_, _ = fig6
    for z in np.geomspace(1e-13, 5e-9, 20):
        ref = oracles.derivative(lambda x: oracles.Tbar_A(x, D500, D500, P), z)
        assert sys_.Tbar_A.derivative(z) == pytest.approx(ref, rel=1e-6)


def test_chain_rule_matches_double_difference_where_well_conditioned(fig6):
    sys_, rep = fig6
    z = rep.middle.z_A
    assert sys_.Tbar_A.derivative(z) == pytest.approx(central_difference(sys_.Tbar_A, z), rel=1e-6)


def test_table_point_has_three_fixed_points(fig6):
    sys_, rep = fig6
    assert len(rep.points) == 3
    assert rep.middle.slope > 1
    assert [pt.label for pt in rep.points] == ["stable", "unstable", "stable"]
    assert crossing_pattern_holds(rep)
    assert classify_patterning(rep) == ("patterned", False)
    for pt in rep.points:
        assert abs(sys_.Tbar_A(pt.z_A) - pt.z_A) < 1e-12 * max(pt.z_A, 1e-15)
        assert pt.z_B == pytest.approx(sys_.T_B(sys_.T_AB(pt.z_A)), rel=1e-14)


def test_slope_same_for_A_and_B_maps(fig6):
    sys_, rep = fig6
    for pt in rep.points:
        assert sys_.Tbar_A.derivative(pt.z_A) == pytest.approx(sys_.Tbar_B.derivative(pt.z_B), rel=1e-10)
        # the partner is a fixed point of the B map
        assert sys_.Tbar_B(pt.z_B) == pytest.approx(pt.z_B, rel=1e-10)


def test_contracting_map_has_one_stable_point():
    rep = find_fixed_points(compose_Tbar(P.replace(p_Ri=1e-12), D500, D500))
    assert len(rep.points) == 1
    assert rep.points[0].label == "stable" and rep.points[0].slope < 1
    assert classify_patterning(rep) == ("homogeneous", False)


@settings(max_examples=25, deadline=None)
@given(st.floats(-10, -4), st.floats(-4, -2.3))
def test_fixed_point_count_odd(log_pri, log_l):
    l = 10**log_l
    rep = find_fixed_points(compose_Tbar(P.replace(p_Ri=10**log_pri), edge_weight(l, l), edge_weight(l, l)))
    assert len(rep.points) % 2 == 1


def _report(slopes):
    pts = tuple(FixedPoint(1e-12 * (i + 1), 1e-12 * (len(slopes) - i), s,
                           "unstable" if s > 1 + 1e-6 else "stable" if s < 1 - 1e-6 else "marginal")
                for i, s in enumerate(slopes))
    return FixedPointReport(pts, (0.0, 1e-8), False, any(p.label == "marginal" for p in pts))


def test_classify_constructed_reports():
    assert classify_patterning(_report([0.4])) == ("homogeneous", False)
    assert classify_patterning(_report([0.1, 1.8, 0.1])) == ("patterned", False)
    assert classify_patterning(_report([0.1, 1.0, 0.1])) == ("homogeneous", True)


def test_full_jacobian_signs_and_blocks(fig6):
    _, rep = fig6
    net = Network.from_graph(two_compartment(500e-6), P)
    allowed = block_structure(net)
    sl = block_slices(net)
    for pt in rep.points:
        y = assemble_steady_state(net, pt.z_A)
        assert np.abs(network_rhs(y, net)).max() < 1e-20
        J = full_jacobian(net, y)
        lam = max_real_eigenvalue(J)
        assert np.sign(lam) == np.sign(pt.slope - 1)
        for (i, j), ok in allowed.items():
            if not ok:
                assert not J[sl[i], sl[j]].any()


def test_quotient_eigenvalue_two_compartment(fig6):
    _, rep = fig6
    g = two_compartment(500e-6)
    net = Network.from_graph(g, P)
    r = verify_quotient_eigenvalue(net, check_equitable(g), rep.middle.z_A)
    assert r.eigenvalues.shape == (1,)
    assert r.passed
    assert r.scalar == pytest.approx(r.scalar_from_maps, rel=1e-9)


def test_quotient_eigenvalue_parallelogram():
    g = parallelogram(500e-6, 700e-6, 500e-6)
    pair = check_equitable(g)
    net = Network.from_graph(g, P)
    rep = find_fixed_points(reduced_system(pair, P))
    r = verify_quotient_eigenvalue(net, pair, rep.middle.z_A)
    assert r.residual < 1e-10
    assert r.passed
    assert r.details["nonnegative"] and r.details["zero_rows"] == 0


def test_non_equitable_residual_grows():
    base = parallelogram(500e-6, 700e-6, 500e-6)
    pair = check_equitable(base)
    z = find_fixed_points(reduced_system(pair, P)).middle.z_A
    residuals = []
    for eps in [0.0, 0.01, 0.05, 0.1]:
        g = parallelogram(500e-6, 700e-6, 500e-6, l_24=500e-6 * (1 + eps))
        residuals.append(verify_quotient_eigenvalue(Network.from_graph(g, P), pair, z).residual)
    assert residuals[0] < 1e-10
    assert all(b > a for a, b in zip(residuals, residuals[1:]))
