"""Seesaw maximization of Bell functionals over two-qubit strategies.

All restarts are advanced together as one batch; each restart draws its
initial point from its own spawned seed, so results do not depend on how
many restarts run alongside it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .functionals import BellFunctional, chsh, chsh_prime, local_bound, tilted
from .quantum import (
    MES,
    PAULI,
    Strategy,
    TwoQubitState,
    bloch_data,
    circle_settings,
    density_of,
    from_vector,
    schmidt_angle,
    strategy_correlators,
)

RESTRICTIONS = ("none", "fixed", "mes", "planar")


class NonConvergence(RuntimeWarning):
    pass


class InvalidObservable(ValueError):
    pass


@dataclass(frozen=True)
class SeesawConfig:
    restarts: int = 32
    max_iters: int = 3000
    tol: float = 1e-13
    seed: int = 0
    restriction: str = "none"
    state: TwoQubitState | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.restriction not in RESTRICTIONS:
            raise ValueError(f"restriction must be one of {RESTRICTIONS}")
        if (self.restriction == "fixed") != (self.state is not None):
            raise ValueError("a state is required exactly for the 'fixed' restriction")


@dataclass
class SeesawResult:
    value: float
    strategy: Strategy
    iterations: int
    converged: bool
    traces: list[np.ndarray] = field(repr=False, default_factory=list)
    restriction: str = "none"


def _random_unit(rng: np.random.Generator, n: int, planar: bool) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    if planar:
        v[:, 1] = 0.0
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _normalize(k: np.ndarray, old: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(k, axis=-1, keepdims=True)
    # a vanishing effective field leaves the observable free; keep the old one
    return np.where(norm > 1e-300, k / np.where(norm > 1e-300, norm, 1.0), old)


def _batched_bloch(psi: np.ndarray):
    rho = np.einsum("ri,rj->rij", psi, psi.conj()).reshape(-1, 2, 2, 2, 2)
    T = np.einsum("rabcd,ica,jdb->rij", rho, PAULI, PAULI).real
    rA = np.einsum("rabcb,ica->ri", rho, PAULI).real
    rB = np.einsum("rabad,jdb->rj", rho, PAULI).real
    return T, rA, rB


def _values(f: BellFunctional, A, B, T, rA, rB) -> np.ndarray:
    E = np.einsum("rxi,rij,ryj->rxy", A, T, B)
    return (f.offset + np.einsum("xy,rxy->r", f.c, E)
            + np.einsum("x,rxi,ri->r", f.mA, A, rA) + np.einsum("y,ryi,ri->r", f.mB, B, rB))


def _bell_operator(f: BellFunctional, A, B) -> np.ndarray:
    opA = np.einsum("rxi,ijk->rxjk", A, PAULI)
    opB = np.einsum("ryi,ijk->ryjk", B, PAULI)
    eye = np.eye(2)
    mixed = np.einsum("xy,rxac,rybd->rabcd", f.c, opA, opB)
    margA = np.einsum("x,rxac,bd->rabcd", f.mA, opA, eye)
    margB = np.einsum("y,ac,rybd->rabcd", f.mB, eye, opB)
    return (mixed + margA + margB).reshape(-1, 4, 4) + f.offset * np.eye(4)


def seesaw(f: BellFunctional, cfg: SeesawConfig = SeesawConfig()) -> SeesawResult:
    """Alternate best responses for Alice, Bob and (unless pinned) the state.

    Minimization problems are solved as maximization of the negated functional.
    """
    g = f if f.sense > 0 else f.negated()
    nA, nB = g.scenario.nA, g.scenario.nB
    R = cfg.restarts
    planar = cfg.restriction == "planar"
    free_state = cfg.restriction in ("none", "planar")

    children = np.random.SeedSequence(cfg.seed).spawn(R)
    A = np.empty((R, nA, 3))
    B = np.empty((R, nB, 3))
    psi = np.empty((R, 4), dtype=complex)
    for r, child in enumerate(children):
        rng = np.random.Generator(np.random.Philox(child))
        A[r] = _random_unit(rng, nA, planar)
        B[r] = _random_unit(rng, nB, planar)
        z = rng.standard_normal(4) + (0 if planar else 1j) * rng.standard_normal(4)
        psi[r] = z / np.linalg.norm(z)

    if free_state:
        T, rA, rB = _batched_bloch(psi)
    else:
        pinned = MES if cfg.restriction == "mes" else cfg.state
        T0, rA0, rB0 = bloch_data(density_of(pinned))
        T, rA, rB = (np.broadcast_to(T0, (R, 3, 3)), np.broadcast_to(rA0, (R, 3)),
                     np.broadcast_to(rB0, (R, 3)))

    mask = np.array([1.0, 0.0, 1.0]) if planar else np.ones(3)
    prev = _values(g, A, B, T, rA, rB)
    trace = [prev]
    done_at = np.full(R, -1)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        kA = np.einsum("rij,xy,ryj->rxi", T, g.c, B) + g.mA[None, :, None] * rA[:, None, :]
        A = _normalize(kA * mask, A)
        kB = np.einsum("rji,xy,rxj->ryi", T, g.c, A) + g.mB[None, :, None] * rB[:, None, :]
        B = _normalize(kB * mask, B)
        if free_state:
            _, vecs = np.linalg.eigh(_bell_operator(g, A, B))
            psi = vecs[:, :, -1]
            T, rA, rB = _batched_bloch(psi)
        cur = _values(g, A, B, T, rA, rB)
        trace.append(cur)
        newly = (done_at < 0) & (np.abs(cur - prev) < cfg.tol)
        done_at[newly] = it
        prev = cur
        if np.all(done_at >= 0):
            break

    traces = np.array(trace).T
    best = int(np.argmax(prev))
    state = from_vector(psi[best]) if free_state else (MES if cfg.restriction == "mes" else cfg.state)
    strategy = Strategy(state, A[best], B[best])
    E, EA, EB = strategy_correlators(strategy)
    value = float(f.offset + np.sum(f.c * E) + f.mA @ EA + f.mB @ EB)
    converged = bool(done_at[best] >= 0)
    if not converged:
        warnings.warn(f"seesaw on {f.name} did not converge in {cfg.max_iters} iterations", NonConvergence)
    iters = int(done_at[best]) if converged else it
    return SeesawResult(value, strategy, iters, converged, list(traces), cfg.restriction)


def _with(cfg: SeesawConfig, restriction: str, restarts: int | None = None) -> SeesawConfig:
    return SeesawConfig(restarts if restarts is not None else cfg.restarts, cfg.max_iters, cfg.tol,
                        cfg.seed, restriction, None)


def seesaw_planar(f: BellFunctional, cfg: SeesawConfig = SeesawConfig()) -> SeesawResult:
    """Seesaw with every Bloch vector confined to the x-z plane (real qubit measurements)."""
    return seesaw(f, _with(cfg, "planar"))


def seesaw_mes(f: BellFunctional, cfg: SeesawConfig = SeesawConfig(restarts=256)) -> SeesawResult:
    """Seesaw on the two-qubit maximally entangled state only.

    This is search evidence at local dimension 2, not an upper-bound certificate.
    """
    return seesaw(f, _with(cfg, "mes"))


@dataclass(frozen=True)
class TiltedRow:
    tau: float
    s_chsh: float
    marginal_sum: float  # -E^A_1 - E^B_1
    s_tau: float
    local_bound: float
    theta_deg: float


def scan_tilted(taus, cfg: SeesawConfig = SeesawConfig()) -> list[TiltedRow]:
    rows = []
    for tau in taus:
        f = tilted(tau)
        res = seesaw(f, cfg)
        E, EA, EB = strategy_correlators(res.strategy)
        s_chsh = float(np.sum(chsh().c * E))
        rows.append(TiltedRow(float(tau), s_chsh, float(-EA[0] - EB[0]), res.value,
                              local_bound(f).value, math.degrees(schmidt_angle(res.strategy.state))))
    return rows


@dataclass(frozen=True)
class CirclePoint:
    theta: float
    s: float
    s_prime: float
    radius: float


def quantum_circle_boundary(thetas) -> list[CirclePoint]:
    out = []
    for th in thetas:
        E, _, _ = strategy_correlators(circle_settings(th))
        s = float(np.sum(chsh().c * E))
        sp = float(np.sum(chsh_prime().c * E))
        out.append(CirclePoint(float(th), s, sp, math.hypot(s, sp)))
    return out


def _check_dichotomic(op: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise InvalidObservable("observables must be 2x2")
    if np.abs(op - op.conj().T).max() > tol or np.abs(op @ op - np.eye(2)).max() > tol:
        raise InvalidObservable("observable is not Hermitian with square 1")
    return op


def sos_residual(theta: float, observables) -> float:
    """Operator norm of 2 sqrt2 - B(theta) minus the two weighted squares.

    ``observables`` is (A1, A2, B1, B2); the residual vanishes for every
    choice of dichotomic observables.
    """
    A1, A2, B1, B2 = (_check_dichotomic(o) for o in observables)
    eye = np.eye(2)
    a1, a2 = np.kron(A1, eye), np.kron(A2, eye)
    b1, b2 = np.kron(eye, B1), np.kron(eye, B2)
    ops_a, ops_b = (a1, a2), (b1, b2)
    bell = sum(
        (math.cos(theta) * (-1) ** (x * y) + math.sin(theta) * (-1) ** ((x + 1) * (y + 1)))
        * ops_a[x] @ ops_b[y]
        for x in range(2) for y in range(2)
    )
    s, c = math.sin(math.pi / 4 + theta), math.cos(math.pi / 4 + theta)
    p = s * a2 + c * a1 - b1
    q = c * a2 - s * a1 + b2
    resid = 2 * math.sqrt(2) * np.eye(4) - bell - (p @ p + q @ q) / math.sqrt(2)
    return float(np.linalg.norm(resid, 2))
