import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopd2d.coopshare import (
    ActionGrid,
    ConfigurationError,
    PairEvaluation,
    QosConfig,
    ResourceDecision,
    aux_hessian,
    brute_force_pair_opt,
    build_grid,
    dbm_to_watt,
    evaluate_grid,
    evaluate_pair,
    feasibility_interval,
    interval_hits_grid,
    nonconvexity_probe,
    reward,
    shaped_reward,
    watt_to_dbm,
)

Q = QosConfig()
COARSE = build_grid(Q.p_min, Q.p_max, 9.0, 0.05)


def straight_line(gammas, d, q):
    """Independent transcription of the pair model using only ``math``."""
    g_mn, g_mb, g_nb, g_nn = gammas
    se_c = d.theta * math.log2(1 + min(g_mn * d.p_c, g_mb * d.p_c + g_nb * d.p_r))
    se_d = (1 - 2 * d.theta) * math.log2(1 + g_nn * d.p_d)
    pc = d.theta * d.p_c
    pd = d.theta * d.p_r + (1 - 2 * d.theta) * d.p_d
    u = q.mu * se_c / pc + q.nu * se_d / pd
    return se_c, se_d, pc, pd, u


# -- units and config ---------------------------------------------------------


@pytest.mark.parametrize("dbm, watt", [(30.0, 1.0), (0.0, 1e-3), (-40.0, 1e-7), (23.0, 0.19952623149688797)])
def test_dbm_conversions(dbm, watt):
    assert dbm_to_watt(dbm) == pytest.approx(watt, rel=1e-12)
    assert watt_to_dbm(watt) == pytest.approx(dbm, abs=1e-9)


def test_default_qos_matches_power_limits():
    assert Q.p_min == pytest.approx(dbm_to_watt(-40.0), rel=1e-12)
    assert Q.p_max == pytest.approx(dbm_to_watt(23.0), rel=1e-12)
    assert (Q.q_c, Q.q_d, Q.mu, Q.nu, Q.phi, Q.phi2) == (5.0, 3.0, 1.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize(
    "kwargs",
    [{"q_c": 0.0}, {"q_d": -1.0}, {"mu": 0.0}, {"nu": -2.0}, {"p_min": 0.0}, {"p_min": 1.0, "p_max": 0.5},
     {"phi": -0.1}, {"phi2": -1.0}],
)
def test_qos_invariants(kwargs):
    with pytest.raises(ConfigurationError):
        QosConfig(**kwargs)


# -- evaluate_pair ------------------------------------------------------------


def test_relay_path_is_the_bottleneck():
    # gamma_mn * p_c = 15, gamma_mb * p_c + gamma_nb * p_r = 3 + 4 = 7
    ev = evaluate_pair(150.0, 30.0, 40.0, 15.0, ResourceDecision(0.1, 0.1, 0.1, 0.25), Q)
    assert ev.se_c == pytest.approx(0.75, rel=1e-15)


def test_d2d_phase_arithmetic():
    q = QosConfig(p_max=1.0)
    ev = evaluate_pair(150.0, 30.0, 40.0, 15.0, ResourceDecision(0.1, 0.2, 0.2, 0.25), q)
    assert ev.se_d == pytest.approx(1.0, rel=1e-15)
    assert ev.pbar_d == pytest.approx(0.15, rel=1e-15)
    assert ev.ee_d == pytest.approx(6.6667, rel=1e-4)
    assert ev.pbar_c == pytest.approx(0.025, rel=1e-15)
    assert ev.u == pytest.approx(ev.ee_c + ev.ee_d, rel=1e-15)


def test_matches_straight_line_transcription():
    rng = np.random.default_rng(17)
    for _ in range(300):
        gammas = tuple(10.0 ** rng.uniform(0, 9, size=4))
        p = Q.p_min * (Q.p_max / Q.p_min) ** rng.random(3)
        d = ResourceDecision(*p, theta=float(rng.uniform(0.01, 0.49)))
        q = QosConfig(mu=float(rng.uniform(0.1, 3)), nu=float(rng.uniform(0.1, 3)))
        ev = evaluate_pair(*gammas, d, q)
        se_c, se_d, pc, pd, u = straight_line(gammas, d, q)
        for got, want in ((ev.se_c, se_c), (ev.se_d, se_d), (ev.pbar_c, pc), (ev.pbar_d, pd), (ev.u, u)):
            assert got == pytest.approx(want, rel=1e-12)
        assert ev.ee_c == pytest.approx(ev.se_c / ev.pbar_c, rel=1e-15)
        assert ev.c1_ok == (ev.se_c >= q.q_c) and ev.c2_ok == (ev.se_d >= q.q_d)


@pytest.mark.parametrize(
    "d",
    [ResourceDecision(1.0, 0.1, 0.1, 0.2), ResourceDecision(0.1, 1e-9, 0.1, 0.2),
     ResourceDecision(0.1, 0.1, 0.1, 0.5), ResourceDecision(0.1, 0.1, 0.1, 0.0)],
)
def test_evaluate_rejects_out_of_range_decisions(d):
    with pytest.raises(ValueError):
        evaluate_pair(1.0, 1.0, 1.0, 1.0, d, Q)


def test_evaluate_rejects_non_positive_gammas():
    with pytest.raises(ValueError):
        evaluate_pair(0.0, 1.0, 1.0, 1.0, ResourceDecision(0.1, 0.1, 0.1, 0.2), Q)


@settings(max_examples=60)
@given(
    g=st.tuples(*[st.floats(1e1, 1e9)] * 4),
    p=st.tuples(*[st.floats(1e-7, 0.1)] * 3),
    k=st.floats(1.0, 2.0),
    theta=st.floats(0.02, 0.4),
)
def test_monotonicity(g, p, k, theta):
    base = evaluate_pair(*g, ResourceDecision(*p, theta), Q)
    more_c = evaluate_pair(*g, ResourceDecision(p[0] * k, p[1], p[2], theta), Q)
    more_r = evaluate_pair(*g, ResourceDecision(p[0], p[1] * k, p[2], theta), Q)
    more_d = evaluate_pair(*g, ResourceDecision(p[0], p[1], p[2] * k, theta), Q)
    more_t = evaluate_pair(*g, ResourceDecision(*p, theta + 0.05), Q)
    assert more_c.se_c >= base.se_c and more_r.se_c >= base.se_c
    assert more_d.se_d >= base.se_d
    assert more_t.se_c > base.se_c and more_t.se_d < base.se_d


# -- reward ---------------------------------------------------------------------


def _ev(u, se_c, se_d):
    return PairEvaluation(se_c, se_d, 1.0, 1.0, 0.0, 0.0, u, se_c >= Q.q_c, se_d >= Q.q_d)


@pytest.mark.parametrize(
    "u, se_c, se_d, expected",
    [
        (10.0, 5.0, 3.0, 10.0),
        (10.0, 2.5, 4.0, 5.0),
        (4.0, 3.75, 1.5, 1.0),
    ],
    ids=["no-violation", "half-violation", "combined"],
)
def test_reward_examples(u, se_c, se_d, expected):
    assert reward(_ev(u, se_c, se_d), Q) == pytest.approx(expected, rel=1e-15)


def test_severe_violation_goes_negative():
    assert reward(_ev(10.0, 0.0, 0.0), Q) == pytest.approx(-10.0)


def test_shaped_reward_vectorizes():
    got = shaped_reward(np.array([10.0, 4.0]), np.array([2.5, 3.75]), np.array([4.0, 1.5]), Q)
    assert got == pytest.approx([5.0, 1.0])


def test_reward_equals_u_exactly_on_feasible_grid_points():
    ev = evaluate_grid((1e7, 1e6, 1e7, 1e7), COARSE, Q)
    feas = ev["feasible"]
    assert feas.any() and (~feas).any()
    assert np.array_equal(ev["reward"][feas], ev["u"][feas])
    assert np.all(ev["reward"][~feas] < ev["u"][~feas])


# -- grid -------------------------------------------------------------------------


@pytest.mark.parametrize("dp_db, n_power, joint", [(3.0, 22, 95_832), (9.0, 8, 4_608)])
def test_grid_sizes(dp_db, n_power, joint):
    g = build_grid(dbm_to_watt(-40.0), dbm_to_watt(23.0), dp_db, 0.05)
    assert g.n_power == n_power and g.n_theta == 9 and g.joint_size == joint
    assert g.power_levels[0] == pytest.approx(1e-7, rel=1e-12)
    assert g.power_levels[-1] == dbm_to_watt(23.0)
    steps_db = np.diff(10 * np.log10(g.power_levels))
    assert np.allclose(steps_db, dp_db, atol=1e-9)
    assert g.theta_levels == pytest.approx(np.arange(1, 10) * 0.05)


@pytest.mark.parametrize(
    "p_min, p_max, dp_db, dtheta",
    [(1e-7, 0.2, 4.0, 0.05), (1e-7, 1e-7, 3.0, 0.05), (1e-7, 0.1, 0.0, 0.05), (1e-7, 0.1, 10.0, 0.3),
     (1e-7, 0.1, 10.0, 0.07), (1e-7, 0.1, 10.0, 0.0)],
)
def test_grid_rejects_non_dividing_steps(p_min, p_max, dp_db, dtheta):
    with pytest.raises(ConfigurationError):
        build_grid(p_min, p_max, dp_db, dtheta)


def test_encode_decode_bijection():
    g = ActionGrid([1.0, 2.0, 3.0], [0.1, 0.2, 0.3, 0.4])
    idx = np.arange(g.joint_size)
    assert np.array_equal(g.encode(*g.decode(idx)), idx)
    seen = {g.decode(int(i)) for i in idx}
    assert len(seen) == g.joint_size
    # theta varies fastest
    assert g.decode(1) == (0, 0, 0, 1) and g.decode(4) == (0, 0, 1, 0)
    with pytest.raises(IndexError):
        g.decode(g.joint_size)


def test_grid_columns_follow_decode():
    p_c, p_r, p_d, th = COARSE.columns()
    for i in (0, 17, 999, COARSE.joint_size - 1):
        d = COARSE.decision(i)
        assert (p_c[i], p_r[i], p_d[i], th[i]) == (d.p_c, d.p_r, d.p_d, d.theta)


def test_grid_evaluation_matches_scalar_evaluation():
    gammas = (3e6, 2e5, 8e6, 5e6)
    ev = evaluate_grid(gammas, COARSE, Q)
    for i in np.random.default_rng(0).integers(0, COARSE.joint_size, 50):
        one = evaluate_pair(*gammas, COARSE.decision(i), Q)
        assert ev["u"][i] == one.u and ev["se_c"][i] == one.se_c and ev["feasible"][i] == one.feasible


# -- feasibility interval ------------------------------------------------------------


def _gammas_for_logs(cell_bits, d2d_bits, q=Q):
    g = (2.0**cell_bits - 1) / q.p_max
    return (g, g, g, (2.0**d2d_bits - 1) / q.p_max)


def test_interval_from_log_terms():
    # min(g, 2g) = g, so the cellular log term is exactly cell_bits
    lo, hi = feasibility_interval(*_gammas_for_logs(20, 12), Q)
    assert lo == pytest.approx(0.25, rel=1e-12)
    assert hi == pytest.approx(0.375, rel=1e-12)


def test_interval_empty_at_half():
    assert feasibility_interval(*_gammas_for_logs(10, 40), Q) is None


def test_interval_empty_for_weak_d2d_link():
    assert feasibility_interval(1e9, 1e9, 1e9, 1e-3, Q) is None


def test_interval_agrees_with_exhaustive_sweep():
    rng = np.random.default_rng(21)
    for _ in range(500):
        gammas = tuple(10.0 ** rng.uniform(2, 10, size=4))
        hit = interval_hits_grid(feasibility_interval(*gammas, Q), COARSE)
        assert hit == (brute_force_pair_opt(gammas, Q, COARSE) is not None)


# -- exhaustive oracle ---------------------------------------------------------------


def test_singleton_grid_returns_its_action():
    g = ActionGrid([Q.p_max], [0.3])
    res = brute_force_pair_opt((1e9, 1e9, 1e9, 1e9), Q, g)
    assert res is not None
    assert res[0] == ResourceDecision(Q.p_max, Q.p_max, Q.p_max, 0.3)


def test_all_infeasible_returns_none():
    gammas = (1e9, 1e9, 1e9, 1e-2)
    assert brute_force_pair_opt(gammas, Q, COARSE) is None
    assert feasibility_interval(*gammas, Q) is None


def test_toy_grid_hand_enumeration():
    levels, thetas = [0.01, 0.1], [0.2, 0.3]
    g = ActionGrid(levels, thetas)
    gammas = (5e6, 4e5, 2e6, 1e4)
    best = -1.0
    for pc, pr, pd, th in itertools.product(levels, levels, levels, thetas):
        d = ResourceDecision(pc, pr, pd, th)
        se_c, se_d, _, _, u = straight_line(gammas, d, Q)
        if se_c >= Q.q_c and se_d >= Q.q_d:
            best = max(best, u)
    assert best > 0
    res = brute_force_pair_opt(gammas, Q, g)
    assert res[1] == pytest.approx(best, rel=1e-12)


def test_oracle_dominates_every_feasible_action_and_prefers_lowest_index():
    gammas = (4e6, 1e6, 9e6, 2e6)
    d, u = brute_force_pair_opt(gammas, Q, COARSE)
    ev = evaluate_grid(gammas, COARSE, Q)
    assert np.all(ev["u"][ev["feasible"]] <= u)
    first = int(np.flatnonzero(ev["feasible"] & (ev["u"] == u))[0])
    assert COARSE.decision(first) == d


@pytest.mark.parametrize("k", [0.5, 3.0, 10.0])
def test_weight_scaling(k):
    gammas = (4e6, 1e6, 9e6, 2e6)
    d1, u1 = brute_force_pair_opt(gammas, Q, COARSE)
    d2, u2 = brute_force_pair_opt(gammas, QosConfig(mu=k, nu=k), COARSE)
    assert d1 == d2
    assert u2 == pytest.approx(k * u1, rel=1e-12)


# -- nonconvexity probe ----------------------------------------------------------------


def test_probe_check_value():
    h11, h12, h22 = aux_hessian(1.0, 1.0, 0.25)
    assert h11 == pytest.approx(0.5 / (4 * math.log(2)), rel=1e-12)
    assert h11 == pytest.approx(0.18034, abs=1e-5)
    assert h12 == pytest.approx(1.44270, abs=1e-5)
    assert h22 == 0.0
    (l1, l2), = nonconvexity_probe(1.0, [1.0], [0.25])
    assert l1 == pytest.approx(1.5356, abs=1e-4)
    assert l2 == pytest.approx(-1.3553, abs=1e-4)


def test_probe_matches_numpy_eigenvalues():
    for beta, x, y in [(0.1, 0.01, 0.1), (10.0, 3.0, 0.45), (1e3, 50.0, 0.02)]:
        h11, h12, h22 = aux_hessian(beta, x, y)
        want = np.sort(np.linalg.eigvalsh([[h11, h12], [h12, h22]]))[::-1]
        got = nonconvexity_probe(beta, [x], [y])[0]
        assert got == pytest.approx(tuple(want), rel=1e-12)


@settings(max_examples=100)
@given(beta=st.floats(1e-2, 1e4), x=st.floats(1e-3, 1e2), y=st.floats(0.01, 0.49))
def test_probe_is_indefinite(beta, x, y):
    (l1, l2), = nonconvexity_probe(beta, [x], [y])
    assert l1 > 0 > l2


@pytest.mark.parametrize("beta, xs, ys", [(0.0, [1.0], [0.2]), (1.0, [0.0], [0.2]), (1.0, [1.0], [0.5])])
def test_probe_preconditions(beta, xs, ys):
    with pytest.raises(ValueError):
        nonconvexity_probe(beta, xs, ys)
