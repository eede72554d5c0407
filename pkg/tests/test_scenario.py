import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocality.scenario import (
    Behavior,
    InfeasibleCorrelators,
    InvalidProbability,
    Scenario,
    ScenarioMismatch,
    SignalingDetected,
    behavior_from_correlators,
    behavior_from_table,
    correlators_of,
    deterministic_behavior,
    is_no_signaling,
    make_correlators,
    pr_box,
    uniform_behavior,
)


def random_ns_correlators(rng, nA, nB):
    """Correlators of a random mixture of deterministic points, hence feasible."""
    k = rng.integers(1, 6)
    w = rng.dirichlet(np.ones(k))
    E = np.zeros((nA, nB))
    EA = np.zeros(nA)
    EB = np.zeros(nB)
    for wi in w:
        a = rng.choice([-1.0, 1.0], nA)
        b = rng.choice([-1.0, 1.0], nB)
        E += wi * np.outer(a, b)
        EA += wi * a
        EB += wi * b
    return make_correlators(E, EA, EB)


def test_pr_box_table():
    b = pr_box()
    # p(a,b|x,y) = 1/2 when a xor b = x and y
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for bb in range(2):
                    want = 0.5 if (a ^ bb) == (x & y) else 0.0
                    assert b.p[a, bb, x, y] == pytest.approx(want, abs=1e-15)


def test_uniform_is_no_signaling_with_zero_correlators():
    c = correlators_of(uniform_behavior(Scenario(3, 2)))
    assert np.all(c.E == 0) and np.all(c.EA == 0) and np.all(c.EB == 0)


def test_deterministic_behavior_is_a_vertex():
    b = deterministic_behavior([1, -1, 1], [-1, 1])
    assert set(np.unique(b.p)) <= {0.0, 1.0}
    c = correlators_of(b)
    assert np.array_equal(c.E, np.outer([1, -1, 1], [-1, 1]))


def test_rejects_bad_tables():
    sc = Scenario(2, 2)
    p = np.full(sc.shape, 0.25)
    p[0, 0, 0, 0] = 0.3
    with pytest.raises(InvalidProbability):
        behavior_from_table(sc, p)
    q = np.full(sc.shape, 0.25)
    q[0, 0, 1, 1], q[1, 1, 1, 1] = -0.1, 0.6
    with pytest.raises(InvalidProbability):
        behavior_from_table(sc, q)
    with pytest.raises(InvalidProbability):
        behavior_from_table(sc, np.full((2, 2, 3, 2), 0.25))
    with pytest.raises(InvalidProbability):
        behavior_from_table(sc, np.full(sc.shape, np.nan))


def test_behavior_is_read_only():
    b = uniform_behavior(Scenario(2, 2))
    with pytest.raises(ValueError):
        b.p[0, 0, 0, 0] = 1.0


def test_infeasible_correlators():
    with pytest.raises(InfeasibleCorrelators):
        behavior_from_correlators(make_correlators([[1.0]], [1.0], [-1.0]))


def test_signaling_detected():
    sc = Scenario(2, 2)
    p = np.zeros(sc.shape)
    # Bob outputs Alice's setting: marginal of b depends on x
    for x in range(2):
        for y in range(2):
            p[0, x, x, y] = 1.0
    b = behavior_from_table(sc, p)
    assert not is_no_signaling(b)
    with pytest.raises(SignalingDetected):
        correlators_of(b, strict=True)
    # non-strict averaging still returns something well defined
    assert correlators_of(b).EB.shape == (2,)


def test_mix_and_mismatch():
    mixed = pr_box().mix(uniform_behavior(Scenario(2, 2)), 0.5)
    assert correlators_of(mixed).E[1, 1] == pytest.approx(-0.5)
    with pytest.raises(ScenarioMismatch):
        pr_box().mix(uniform_behavior(Scenario(3, 2)), 0.5)


def test_json_round_trip():
    b = pr_box()
    again = Behavior.from_json(b.to_json())
    assert again.scenario == b.scenario
    assert np.array_equal(again.p, b.p)


def test_round_trip_1000_random_cases():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        nA, nB = rng.integers(1, 5, size=2)
        c = random_ns_correlators(rng, nA, nB)
        back = correlators_of(behavior_from_correlators(c))
        worst = max(worst, np.abs(back.E - c.E).max(), np.abs(back.EA - c.EA).max(),
                    np.abs(back.EB - c.EB).max())
    assert worst <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_round_trip_property(nA, nB, seed):
    c = random_ns_correlators(np.random.default_rng(seed), nA, nB)
    b = behavior_from_correlators(c)
    assert is_no_signaling(b)
    back = correlators_of(b, strict=True)
    np.testing.assert_allclose(back.E, c.E, atol=1e-12)
    np.testing.assert_allclose(back.EA, c.EA, atol=1e-12)
    np.testing.assert_allclose(back.EB, c.EB, atol=1e-12)
