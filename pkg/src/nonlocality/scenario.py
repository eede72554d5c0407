"""Bipartite binary-outcome Bell scenarios: behaviors and correlators.

Index convention for probability tables: ``p[a, b, x, y]`` where the outcome
index 0 stands for the outcome +1 and index 1 for -1. Settings ``x`` and ``y``
are zero-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

LOGICAL_TOL = 1e-9
ARITH_TOL = 1e-12

# outcome value for each outcome index
SIGNS = np.array([1.0, -1.0])


class InvalidProbability(ValueError):
    pass


class SignalingDetected(ValueError):
    pass


class InfeasibleCorrelators(ValueError):
    pass


class ScenarioMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    nA: int
    nB: int

    def __post_init__(self):
        if int(self.nA) < 1 or int(self.nB) < 1:
            raise ValueError(f"need at least one setting per party, got {self.nA}x{self.nB}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (2, 2, self.nA, self.nB)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Behavior:
    """Conditional distribution p(a,b|x,y). Build with :func:`behavior_from_table`."""

    scenario: Scenario
    p: np.ndarray

    def mix(self, other: "Behavior", weight: float) -> "Behavior":
        """Return ``(1 - weight) * self + weight * other``."""
        if other.scenario != self.scenario:
            raise ScenarioMismatch("cannot mix behaviors from different scenarios")
        return behavior_from_table(self.scenario, (1 - weight) * self.p + weight * other.p)

    def to_json(self) -> dict:
        return {"nA": self.scenario.nA, "nB": self.scenario.nB, "p": self.p.tolist()}

    @classmethod
    def from_json(cls, data: dict | str) -> "Behavior":
        if isinstance(data, str):
            data = json.loads(data)
        return behavior_from_table(Scenario(int(data["nA"]), int(data["nB"])), np.asarray(data["p"], dtype=float))


@dataclass(frozen=True, eq=False)
class Correlators:
    scenario: Scenario
    E: np.ndarray
    EA: np.ndarray
    EB: np.ndarray

    def __post_init__(self):
        s = self.scenario
        if self.E.shape != (s.nA, s.nB) or self.EA.shape != (s.nA,) or self.EB.shape != (s.nB,):
            raise ScenarioMismatch("correlator tables do not match the scenario")


def make_correlators(E, EA=None, EB=None) -> Correlators:
    E = np.atleast_2d(np.asarray(E, dtype=float))
    nA, nB = E.shape
    EA = np.zeros(nA) if EA is None else np.asarray(EA, dtype=float)
    EB = np.zeros(nB) if EB is None else np.asarray(EB, dtype=float)
    return Correlators(Scenario(nA, nB), _frozen(E), _frozen(EA), _frozen(EB))


def behavior_from_table(scenario: Scenario, p, tol: float = LOGICAL_TOL) -> Behavior:
    p = np.asarray(p, dtype=float)
    if p.shape != scenario.shape:
        raise InvalidProbability(f"table shape {p.shape} does not match {scenario.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidProbability("table contains non-finite entries")
    if p.min() < -ARITH_TOL or p.max() > 1 + ARITH_TOL:
        raise InvalidProbability("probability outside [0, 1]")
    sums = p.sum(axis=(0, 1))
    bad = np.abs(sums - 1) > tol
    if bad.any():
        x, y = np.argwhere(bad)[0]
        raise InvalidProbability(f"setting pair ({x}, {y}) sums to {sums[x, y]!r}")
    return Behavior(scenario, _frozen(p))


def uniform_behavior(scenario: Scenario) -> Behavior:
    return behavior_from_table(scenario, np.full(scenario.shape, 0.25))


def pr_box() -> Behavior:
    """The PR box with E = (1, 1, 1, -1) and unbiased marginals."""
    return behavior_from_correlators(make_correlators([[1, 1], [1, -1]]))


def deterministic_behavior(a_out, b_out) -> Behavior:
    """Local deterministic behavior with outcome ``a_out[x]`` and ``b_out[y]`` (values +-1)."""
    a_out = np.asarray(a_out, dtype=float)
    b_out = np.asarray(b_out, dtype=float)
    return behavior_from_correlators(make_correlators(np.outer(a_out, b_out), a_out, b_out))


def alice_marginals(b: Behavior) -> np.ndarray:
    """p(a|x,y), shape (2, nA, nB)."""
    return b.p.sum(axis=1)


def bob_marginals(b: Behavior) -> np.ndarray:
    """p(b|x,y), shape (2, nA, nB)."""
    return b.p.sum(axis=0)


def is_no_signaling(b: Behavior, tol: float = LOGICAL_TOL) -> bool:
    pa = alice_marginals(b)
    pb = bob_marginals(b)
    spread_a = np.ptp(pa, axis=2).max()
    spread_b = np.ptp(pb, axis=1).max()
    return bool(spread_a <= tol and spread_b <= tol)


def correlators_of(b: Behavior, strict: bool = False, tol: float = LOGICAL_TOL) -> Correlators:
    """Correlators and marginals of a behavior.

    Marginals are averaged over the other party's settings, which is the
    unbiased choice for noisy data. With ``strict=True`` a signaling behavior
    raises :class:`SignalingDetected` instead.
    """
    if strict and not is_no_signaling(b, tol):
        raise SignalingDetected("marginals depend on the remote setting")
    E = np.einsum("a,b,abxy->xy", SIGNS, SIGNS, b.p)
    EA = np.einsum("a,axy->x", SIGNS, alice_marginals(b)) / b.scenario.nB
    EB = np.einsum("b,bxy->y", SIGNS, bob_marginals(b)) / b.scenario.nA
    return Correlators(b.scenario, _frozen(E), _frozen(EA), _frozen(EB))


def behavior_from_correlators(c: Correlators, tol: float = LOGICAL_TOL) -> Behavior:
    p = 0.25 * (
        1
        + SIGNS[:, None, None, None] * c.EA[None, None, :, None]
        + SIGNS[None, :, None, None] * c.EB[None, None, None, :]
        + np.einsum("a,b,xy->abxy", SIGNS, SIGNS, c.E)
    )
    if p.min() < -tol:
        raise InfeasibleCorrelators(f"reconstructed probability {p.min():.3g} < 0")
    # clip only the sub-tolerance rounding residue
    p = np.clip(p, 0.0, 1.0)
    return behavior_from_table(c.scenario, p)
