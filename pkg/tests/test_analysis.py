import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from nonlocality import fixtures
from nonlocality.analysis import (
    MissingSettings,
    SignalingInput,
    additive_bias,
    chained_nonlocal_content,
    deterministic_vertices,
    epr2_local_content,
    functional_error,
    outcome_weights,
    predictability_bound,
)
from nonlocality.functionals import TooManySettings, chained, chsh, evaluate, m3322, tilted
from nonlocality.quantum import Strategy, behavior_of, chained_settings, circle_settings, from_density
from nonlocality.scenario import (
    Scenario,
    ScenarioMismatch,
    behavior_from_table,
    correlators_of,
    deterministic_behavior,
    pr_box,
    uniform_behavior,
)
from nonlocality.simplex import LpFailure, maximize
from nonlocality.simulate import CountRecord


def scipy_q_min(b):
    cols = [d.reshape(-1) for _, _, d in deterministic_vertices(b.scenario)]
    D = np.array(cols).T
    res = linprog(-np.ones(D.shape[1]), A_ub=D, b_ub=b.p.reshape(-1), bounds=(0, None), method="highs")
    assert res.status == 0
    return 1 + res.fun


def random_quantum(rng, nA, nB):
    G = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    rho = G @ G.conj().T
    v = lambda n: (lambda u: u / np.linalg.norm(u, axis=1, keepdims=True))(rng.standard_normal((n, 3)))
    return behavior_of(Strategy(from_density(rho / np.trace(rho).real), v(nA), v(nB)))


# -- EPR2 --------------------------------------------------------------------

def test_tsirelson_q_min():
    res = epr2_local_content(behavior_of(circle_settings(0.0)))
    assert res.q_min == pytest.approx(math.sqrt(2) - 1, abs=1e-6)
    assert res.status == "optimal"


def test_pr_box_is_fully_nonlocal():
    res = epr2_local_content(pr_box())
    assert res.q_min == pytest.approx(1.0, abs=1e-12)
    assert res.local_part is None


def test_vertices_are_local():
    for a in ((1, 1), (1, -1), (-1, -1)):
        for b in ((1, -1), (-1, 1)):
            assert epr2_local_content(deterministic_behavior(a, b)).q_min == 0
    assert epr2_local_content(uniform_behavior(Scenario(3, 3))).q_min == 0


@pytest.mark.parametrize("lam", np.linspace(0, 1, 21))
def test_pr_noise_mixture_grid_oracle(lam):
    """q_min of lam*PR + (1-lam)*uniform is max(0, 2 lam - 1).

    Independent check: on a grid of q, (b - q PR)/(1 - q) must be a valid
    behavior inside all eight CHSH facets.
    """
    b = uniform_behavior(Scenario(2, 2)).mix(pr_box(), lam)
    analytic = max(0.0, 2 * lam - 1)
    grid = np.linspace(0, 1, 2001)[:-1]
    feasible = []
    for q in grid:
        r = (b.p - q * pr_box().p) / (1 - q)
        if r.min() < -1e-12:
            continue
        E = np.einsum("a,b,abxy->xy", [1, -1], [1, -1], r)
        facets = [abs(E[0, 0] + E[0, 1] + E[1, 0] + E[1, 1] - 2 * E[i, j]) for i in (0, 1) for j in (0, 1)]
        if max(facets) <= 2 + 1e-12:
            feasible.append(q)
    grid_q = min(feasible) if lam < 1 else 1.0
    assert abs(grid_q - analytic) <= 1e-3
    assert epr2_local_content(b).q_min == pytest.approx(analytic, abs=1e-9)


def test_matches_scipy_on_random_quantum_behaviors():
    rng = np.random.default_rng(17)
    for nA, nB in ((2, 2), (2, 3), (3, 3), (3, 2)):
        for _ in range(5):
            b = random_quantum(rng, nA, nB)
            assert epr2_local_content(b).q_min == pytest.approx(scipy_q_min(b), abs=1e-8)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_chained_ideal_q_min(n):
    b = behavior_of(chained_settings(n))
    q = epr2_local_content(b).q_min
    value = evaluate(chained(n), b)
    assert q == pytest.approx(1 - value, abs=1e-9)
    assert q == pytest.approx(scipy_q_min(b), abs=1e-9)


def test_decomposition_reconstructs_behavior():
    rng = np.random.default_rng(23)
    for _ in range(5):
        b = random_quantum(rng, 2, 3)
        res = epr2_local_content(b)
        np.testing.assert_allclose(res.reconstruct(), b.p, atol=1e-9)
        assert sum(res.weights.values()) == pytest.approx(1 - res.q_min, abs=1e-9)
        if res.remainder is not None:
            # by optimality no further local weight fits under the remainder
            assert epr2_local_content(res.remainder).q_min == pytest.approx(1, abs=1e-6)


def test_epr2_json():
    data = epr2_local_content(behavior_of(circle_settings(0.0))).to_json()
    assert set(data) == {"q_min", "status", "weights", "local_part", "remainder"}


def test_epr2_guards():
    sc = Scenario(2, 2)
    p = np.zeros(sc.shape)
    for x in range(2):
        for y in range(2):
            p[0, x, x, y] = 1.0
    with pytest.raises(SignalingInput):
        epr2_local_content(behavior_from_table(sc, p))
    with pytest.raises(TooManySettings):
        epr2_local_content(uniform_behavior(Scenario(9, 2)))


# -- simplex -----------------------------------------------------------------

def test_simplex_small_problem():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    sol = maximize([1, 1], [[1, 2], [3, 1]], [4, 6])
    assert sol.objective == pytest.approx(2.8)
    np.testing.assert_allclose(sol.x, [1.6, 1.2])


def test_simplex_failures():
    with pytest.raises(LpFailure):
        maximize([1, 0], [[-1, 0]], [1])
    with pytest.raises(LpFailure):
        maximize([1], [[1]], [-1])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_simplex_matches_highs(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.1, 2, (m, n))
    b = rng.uniform(0, 3, m)
    c = rng.uniform(-1, 2, n)
    ours = maximize(c, A, b)
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    assert ours.objective == pytest.approx(-ref.fun, abs=1e-9)


# -- chained consequences ----------------------------------------------------

def test_nonlocal_content_headline():
    assert chained_nonlocal_content(0.126) == pytest.approx(0.874, abs=1e-12)
    assert chained_nonlocal_content(1.5) == 0
    with pytest.raises(ValueError):
        chained_nonlocal_content(-0.1)


def test_predictability_table3_within_two_nu():
    rows = fixtures.load("table3").rows
    assert len(rows) == 44
    for r in rows:
        p = predictability_bound(r["I_n"], r["nu_n"])
        assert abs(p.delta - r["delta_n"]) <= 2 * r["nu_n"], r["n"]


def test_predictability_pieces():
    p = predictability_bound(0.126, 0.0004)
    assert p.unbiased == pytest.approx(0.563)
    assert p.delta == pytest.approx(0.5634)
    custom = predictability_bound(0.126, 0.01, correction=lambda base, bias: base * (1 + bias))
    assert custom.delta == pytest.approx(0.563 * 1.01)
    assert additive_bias(0.5, 0.1) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        predictability_bound(0.1, 1.5)


# -- count-based errors ------------------------------------------------------

def _counts_from_behavior(b, N):
    p = b.p.transpose(2, 3, 0, 1).reshape(b.scenario.nA, b.scenario.nB, 4)
    return CountRecord(np.rint(p * N).astype(int), np.ones(p.shape[:2]), 0)


def test_outcome_weights_reproduce_functional():
    rng = np.random.default_rng(8)
    b = random_quantum(rng, 2, 2)
    f = tilted(1.2)
    w = outcome_weights(f)
    assert f.offset + np.sum(w * b.p) == pytest.approx(evaluate(f, b), abs=1e-12)


def test_functional_error_on_exact_counts():
    b = behavior_of(circle_settings(0.0))
    N = 10**6
    rec = _counts_from_behavior(b, N)
    rep = functional_error(chsh(), rec)
    assert rep.value == pytest.approx(2 * math.sqrt(2), abs=1e-5)
    E = correlators_of(b).E
    # correlator-only functional: var = sum (1 - E^2)/N
    assert rep.std_error == pytest.approx(math.sqrt(np.sum(1 - E ** 2) / N), rel=1e-4)


def test_functional_error_guards():
    rec = CountRecord(np.zeros((2, 2, 4), dtype=int), np.ones((2, 2)), 0)
    with pytest.raises(MissingSettings):
        functional_error(chsh(), rec)
    with pytest.raises(ScenarioMismatch):
        functional_error(m3322(), _counts_from_behavior(pr_box(), 100))
