"""Bell functionals in correlator form and their exact local / L+1PR / algebraic bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .scenario import Behavior, Scenario, ScenarioMismatch, correlators_of

Direction = Literal["maximize", "minimize"]

MAX_LOCAL_SETTINGS = 26
MAX_WIRING_COUNT = 10**8
_CHUNK = 1 << 16


class OutOfRangeTau(ValueError):
    pass


class InvalidN(ValueError):
    pass


class TooManySettings(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BellFunctional:
    """``offset + sum c[x,y] E_xy + sum mA[x] E^A_x + sum mB[y] E^B_y``.

    ``reference_local`` is the bound the literature quotes for the inequality,
    kept for reports; :func:`local_bound` always recomputes it.
    """

    scenario: Scenario
    c: np.ndarray
    mA: np.ndarray
    mB: np.ndarray
    offset: float = 0.0
    direction: Direction = "maximize"
    name: str = ""
    reference_local: float | None = None

    def __post_init__(self):
        s = self.scenario
        if self.c.shape != (s.nA, s.nB) or self.mA.shape != (s.nA,) or self.mB.shape != (s.nB,):
            raise ScenarioMismatch("coefficient tables do not match the scenario")
        if self.direction not in ("maximize", "minimize"):
            raise ValueError(f"unknown direction {self.direction!r}")

    @property
    def sense(self) -> float:
        """+1 for maximization, -1 for minimization."""
        return 1.0 if self.direction == "maximize" else -1.0

    def negated(self) -> "BellFunctional":
        flip = "minimize" if self.direction == "maximize" else "maximize"
        return functional(-self.c, -self.mA, -self.mB, -self.offset, flip, f"-{self.name}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "nA": self.scenario.nA,
            "nB": self.scenario.nB,
            "c": self.c.tolist(),
            "mA": self.mA.tolist(),
            "mB": self.mB.tolist(),
            "offset": self.offset,
            "direction": self.direction,
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "BellFunctional":
        if isinstance(data, str):
            data = json.loads(data)
        f = functional(data["c"], data.get("mA"), data.get("mB"), data.get("offset", 0.0),
                       data.get("direction", "maximize"), data.get("name", ""))
        if (f.scenario.nA, f.scenario.nB) != (int(data["nA"]), int(data["nB"])):
            raise ScenarioMismatch("declared nA/nB disagree with the coefficient table")
        return f


def functional(c, mA=None, mB=None, offset=0.0, direction: Direction = "maximize", name="",
               reference_local=None) -> BellFunctional:
    c = np.atleast_2d(np.array(c, dtype=float))
    nA, nB = c.shape
    mA = np.zeros(nA) if mA is None else np.array(mA, dtype=float)
    mB = np.zeros(nB) if mB is None else np.array(mB, dtype=float)
    for arr in (c, mA, mB):
        arr.setflags(write=False)
    return BellFunctional(Scenario(nA, nB), c, mA, mB, float(offset), direction, name, reference_local)


@dataclass(frozen=True)
class BoundResult:
    value: float
    witness: dict = field(default_factory=dict)


def evaluate(f: BellFunctional, b: Behavior) -> float:
    if f.scenario != b.scenario:
        raise ScenarioMismatch(f"functional is {f.scenario}, behavior is {b.scenario}")
    cor = correlators_of(b)
    return float(f.offset + np.sum(f.c * cor.E) + f.mA @ cor.EA + f.mB @ cor.EB)


# -- the inequalities -------------------------------------------------------

def chsh() -> BellFunctional:
    return functional([[1, 1], [1, -1]], name="chsh", reference_local=2.0)


def chsh_prime() -> BellFunctional:
    return functional([[-1, 1], [1, 1]], name="chsh_prime", reference_local=2.0)


def tilted(tau: float) -> BellFunctional:
    if not 1.0 <= tau <= 1.5:
        raise OutOfRangeTau(f"tau must lie in [1, 3/2], got {tau}")
    w = 2 * (1 - tau)
    return functional([[1, 1], [1, -1]], [w, 0], [w, 0], name=f"tilted({tau:g})",
                      reference_local=2 * (2 * tau - 1))


def chained(n: int) -> BellFunctional:
    """Chained inequality ``I_n >= 1`` rewritten with p(a!=b) = (1-E)/2, p(a=b) = (1+E)/2."""
    if int(n) != n or n < 2:
        raise InvalidN(f"chained inequality needs n >= 2, got {n}")
    n = int(n)
    c = np.zeros((n, n))
    for x in range(n):
        c[x, x] -= 0.5
        if x + 1 < n:
            c[x, x + 1] -= 0.5
    c[n - 1, 0] += 0.5
    return functional(c, offset=n, direction="minimize", name=f"chained({n})", reference_local=1.0)


def m3322() -> BellFunctional:
    c = [[1, 1, 1],
         [1, 1, -1],
         [1, -1, 0]]
    return functional(c, [-1, -1, 0], [-1, 1, 0], name="m3322", reference_local=6.0)


def m4322() -> BellFunctional:
    # indices as printed: x = 1..3, y = 1..4
    c = [[1, 1, 1, 0],
         [1, 0, -1, 1],
         [1, -1, 0, -1]]
    return functional(c, [-1, -1, -1], [-1, 0, 0, 0], name="m4322", reference_local=7.0)


def elegant() -> BellFunctional:
    c = [[1, 1, 1],
         [1, -1, -1],
         [-1, 1, -1],
         [-1, -1, 1]]
    return functional(c, name="elegant", reference_local=6.0)


NAMED = {
    "chsh": chsh,
    "chsh_prime": chsh_prime,
    "m3322": m3322,
    "m4322": m4322,
    "elegant": elegant,
}


def by_name(name: str, n: int | None = None, tau: float | None = None) -> BellFunctional:
    name = name.lower().replace("-", "_")
    if name == "chained":
        if n is None:
            raise InvalidN("chained needs n")
        return chained(n)
    if name == "tilted":
        if tau is None:
            raise OutOfRangeTau("tilted needs tau")
        return tilted(tau)
    if name not in NAMED:
        raise KeyError(f"unknown functional {name!r}")
    return NAMED[name]()


# -- bounds -----------------------------------------------------------------

def _sign_rows(n: int, start: int, stop: int) -> np.ndarray:
    """Rows of +-1 for assignment indices [start, stop); setting 0 is the most significant bit, bit 0 -> +1."""
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n - 1, -1, -1, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


def local_bound(f: BellFunctional) -> BoundResult:
    """Exact optimum over local deterministic strategies.

    Alice's sign assignments are enumerated; Bob's best reply is independent
    per setting. Ties go to the lexicographically smallest assignment (+1 first).
    """
    nA = f.scenario.nA
    if nA > MAX_LOCAL_SETTINGS:
        raise TooManySettings(f"nA = {nA} exceeds the enumeration guard of {MAX_LOCAL_SETTINGS}")
    s = f.sense
    best_val, best_a, best_b = -math.inf, None, None
    for start in range(0, 1 << nA, _CHUNK):
        A = _sign_rows(nA, start, min(start + _CHUNK, 1 << nA))
        field_b = A @ f.c + f.mB
        # in sense-adjusted units Bob adds |field|, choosing +1 on ties
        B = np.where(s * field_b >= 0, 1.0, -1.0)
        vals = s * (f.offset + A @ f.mA) + np.abs(field_b).sum(axis=1)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_a, best_b = vals[i], A[i], B[i]
    value = s * best_val + 0.0
    return BoundResult(float(value), {"kind": "local", "a": best_a.astype(int).tolist(), "b": best_b.astype(int).tolist()})


def algebraic_bound(f: BellFunctional) -> float:
    """Optimum over tables that are merely normalized and nonnegative per setting pair."""
    nA, nB = f.scenario.nA, f.scenario.nB
    sg = np.array([1.0, -1.0])
    w = (f.c[None, None] * sg[:, None, None, None] * sg[None, :, None, None]
         + sg[:, None, None, None] * f.mA[None, None, :, None] / nB
         + sg[None, :, None, None] * f.mB[None, None, None, :] / nA)
    per_pair = w.reshape(4, nA, nB).max(axis=0) if f.sense > 0 else w.reshape(4, nA, nB).min(axis=0)
    return float(f.offset + per_pair.sum())


# A wiring for one setting: (PR input bit, output rule). Rules in tie-break order:
# constant +1, constant -1, copy the box output, flip it.
WIRINGS = [(g, rule) for g in (0, 1) for rule in ("+1", "-1", "copy", "flip")]
_W_G = np.array([g for g, _ in WIRINGS], dtype=float)
_W_M = np.array([{"+1": 1, "-1": -1}.get(r, 0) for _, r in WIRINGS], dtype=float)
_W_T = np.array([{"copy": 1, "flip": -1}.get(r, 0) for _, r in WIRINGS], dtype=float)


def wiring_correlators(wa, wb) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Correlators of a pair of wirings into one shared PR box (alpha XOR beta = g h)."""
    wa, wb = np.asarray(wa), np.asarray(wb)
    ma, ta, ga = _W_M[wa], _W_T[wa], _W_G[wa]
    mb, tb, gb = _W_M[wb], _W_T[wb], _W_G[wb]
    E = np.outer(ma, mb) + np.outer(ta, tb) * (1 - 2 * np.outer(ga, gb))
    return E, ma, mb


def lplus1pr_bound(f: BellFunctional) -> BoundResult:
    """Exact optimum over local strategies wired into a single PR box.

    Every party picks, per setting, a box input bit and one of four output
    rules. Alice's wirings are enumerated; Bob's best reply is per setting.
    """
    nA, nB = f.scenario.nA, f.scenario.nB
    if 8.0 ** (nA + nB) > MAX_WIRING_COUNT:
        raise TooManySettings(f"8^{nA + nB} wirings exceed the enumeration guard")
    s = f.sense
    total = 8 ** nA
    idx = np.arange(total, dtype=np.int64)[:, None]
    digits = (idx // (8 ** np.arange(nA - 1, -1, -1, dtype=np.int64))) % 8
    ma, ta, ga = _W_M[digits], _W_T[digits], _W_G[digits]
    # Bob's options per setting, in WIRINGS order
    S0 = ma @ f.c + f.mB                       # constant outputs: +-S0
    S1 = np.stack([ta @ f.c, (ta * (1 - 2 * ga)) @ f.c])  # box outputs with h = 0, 1
    opts = np.empty((total, nB, 8))
    for k, (g, rule) in enumerate(WIRINGS):
        if rule in ("+1", "-1"):
            opts[:, :, k] = _W_M[k] * S0
        else:
            opts[:, :, k] = _W_T[k] * S1[g]
    opts *= s
    choice = np.argmax(opts, axis=2)
    vals = s * (f.offset + ma @ f.mA) + np.take_along_axis(opts, choice[:, :, None], axis=2)[:, :, 0].sum(axis=1)
    i = int(np.argmax(vals))
    witness = {
        "kind": "lplus1pr",
        "alice": [list(WIRINGS[k]) for k in digits[i]],
        "bob": [list(WIRINGS[k]) for k in choice[i]],
        "alice_index": digits[i].tolist(),
        "bob_index": choice[i].tolist(),
    }
    return BoundResult(float(s * vals[i]) + 0.0, witness)


def evaluate_witness(f: BellFunctional, witness: dict) -> float:
    """Re-evaluate the strategy stored in a :class:`BoundResult` witness."""
    if witness["kind"] == "local":
        a = np.asarray(witness["a"], dtype=float)
        b = np.asarray(witness["b"], dtype=float)
        E, ma, mb = np.outer(a, b), a, b
    else:
        E, ma, mb = wiring_correlators(witness["alice_index"], witness["bob_index"])
    return float(f.offset + np.sum(f.c * E) + f.mA @ ma + f.mB @ mb)
