"""Local content, chained-inequality consequences and count-based error bars."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, NamedTuple

import numpy as np

from .functionals import BellFunctional, TooManySettings
from .scenario import Behavior, Scenario, ScenarioMismatch, behavior_from_table, is_no_signaling
from .simplex import maximize

if TYPE_CHECKING:
    from .simulate import CountRecord

EPR2_MAX_SETTINGS = 8
EPR2_NS_TOL = 1e-8
ZERO_TOL = 1e-9


class SignalingInput(ValueError):
    pass


class MissingSettings(ValueError):
    pass


@dataclass
class Epr2Result:
    q_min: float
    weights: dict[tuple[tuple[int, ...], tuple[int, ...]], float]
    local_part: Behavior | None
    remainder: Behavior | None
    status: str
    pivots: int = 0

    def reconstruct(self) -> np.ndarray:
        p = np.zeros_like((self.local_part or self.remainder).p)
        if self.local_part is not None:
            p += (1 - self.q_min) * self.local_part.p
        if self.remainder is not None:
            p += self.q_min * self.remainder.p
        return p

    def to_json(self) -> dict:
        return {
            "q_min": self.q_min,
            "status": self.status,
            "weights": [{"a": list(a), "b": list(b), "weight": w} for (a, b), w in self.weights.items()],
            "local_part": None if self.local_part is None else self.local_part.to_json(),
            "remainder": None if self.remainder is None else self.remainder.to_json(),
        }


def deterministic_vertices(sc: Scenario):
    """All joint deterministic strategies as (a_out, b_out, table) with outcomes +-1."""
    for a_out in itertools.product((1, -1), repeat=sc.nA):
        for b_out in itertools.product((1, -1), repeat=sc.nB):
            d = np.zeros(sc.shape)
            for x, ax in enumerate(a_out):
                for y, by in enumerate(b_out):
                    d[(1 - ax) // 2, (1 - by) // 2, x, y] = 1.0
            yield a_out, b_out, d


def epr2_local_content(b: Behavior) -> Epr2Result:
    """Smallest nonlocal weight q in p = (1 - q) p_L + q p_NS.

    Maximizes the total weight of deterministic vertices that fit under p.
    The remainder inherits no-signaling from p because every vertex is
    no-signaling, so those equalities need not be imposed.
    """
    sc = b.scenario
    if sc.nA > EPR2_MAX_SETTINGS or sc.nB > EPR2_MAX_SETTINGS:
        raise TooManySettings(f"EPR2 LP limited to {EPR2_MAX_SETTINGS} settings per party")
    if not is_no_signaling(b, EPR2_NS_TOL):
        raise SignalingInput("EPR2 decomposition needs a no-signaling behavior")

    labels, columns = [], []
    for a_out, b_out, d in deterministic_vertices(sc):
        labels.append((a_out, b_out))
        columns.append(d.reshape(-1))
    D = np.array(columns).T
    sol = maximize(np.ones(D.shape[1]), D, b.p.reshape(-1))
    lam = np.where(sol.x > ZERO_TOL, sol.x, 0.0)
    local_weight = float(lam.sum())
    q = min(1.0, max(0.0, 1.0 - local_weight))
    if q < ZERO_TOL:
        q = 0.0

    weights = {labels[i]: float(lam[i]) for i in np.flatnonzero(lam)}
    local_part = remainder = None
    if local_weight > 0:
        local_part = behavior_from_table(sc, np.clip((D @ lam).reshape(sc.shape) / local_weight, 0, 1), tol=1e-8)
    if q > 0:
        r = np.clip(b.p - (D @ lam).reshape(sc.shape), 0.0, None)
        remainder = behavior_from_table(sc, r / r.sum(axis=(0, 1), keepdims=True), tol=1e-8)
    return Epr2Result(q, weights, local_part, remainder, sol.status, sol.pivots)


def chained_nonlocal_content(value: float) -> float:
    """Lower bound 1 - I_n on the nonlocal content, clamped to [0, 1]."""
    if value < 0:
        raise ValueError("chained value must be nonnegative")
    return max(0.0, min(1.0, 1.0 - value))


class Predictability(NamedTuple):
    delta: float
    unbiased: float
    bias: float


def additive_bias(unbiased: float, bias: float) -> float:
    return unbiased + bias


def predictability_bound(value: float, bias: float = 0.0,
                         correction: Callable[[float, float], float] = additive_bias) -> Predictability:
    """Guessing-probability bound from a chained value.

    The zero-bias bound is 1/2 + I_n/2; measured setting bias enters through
    ``correction`` (additive by default).
    """
    if value < 0 or not 0 <= bias <= 1:
        raise ValueError("need value >= 0 and bias in [0, 1]")
    base = 0.5 + value / 2
    return Predictability(correction(base, bias), base, bias)


@dataclass
class UncertaintyReport:
    value: float
    std_error: float
    correlator_errors: np.ndarray

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")


_SG = np.array([1.0, -1.0])


def outcome_weights(f: BellFunctional) -> np.ndarray:
    """Per-outcome weights w[a, b, x, y] so that value = offset + sum w p, marginals averaged."""
    nA, nB = f.scenario.nA, f.scenario.nB
    return (f.c[None, None] * _SG[:, None, None, None] * _SG[None, :, None, None]
            + _SG[:, None, None, None] * f.mA[None, None, :, None] / nB
            + _SG[None, :, None, None] * f.mB[None, None, None, :] / nA)


def functional_error(f: BellFunctional, counts: "CountRecord") -> UncertaintyReport:
    """Value and multinomial standard error of ``f`` on counted data."""
    n = np.asarray(counts.counts, dtype=float)
    if n.shape[:2] != (f.scenario.nA, f.scenario.nB):
        raise ScenarioMismatch(f"counts cover {n.shape[:2]}, functional needs {f.scenario}")
    N = n.sum(axis=2)
    if np.any(N <= 0):
        x, y = np.argwhere(N <= 0)[0]
        raise MissingSettings(f"no counts for setting pair ({x}, {y})")
    phat = (n / N[:, :, None]).reshape(f.scenario.nA, f.scenario.nB, 2, 2).transpose(2, 3, 0, 1)
    w = outcome_weights(f)
    mean = (w * phat).sum(axis=(0, 1))
    second = (w ** 2 * phat).sum(axis=(0, 1))
    var = np.maximum(second - mean ** 2, 0.0) / N
    E = np.einsum("a,b,abxy->xy", _SG, _SG, phat)
    corr_err = np.sqrt(np.maximum(1 - E ** 2, 0.0) / N)
    return UncertaintyReport(float(f.offset + mean.sum()), float(math.sqrt(var.sum())), corr_err)
