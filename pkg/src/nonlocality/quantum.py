"""Two-qubit states, Bloch-vector observables and the Born rule.

Basis order is |HH>, |HV>, |VH>, |VV> with |H> the +1 eigenstate of sigma_z.
A linear polarizer at angle phi (projecting onto cos(phi)|H> + sin(phi)|V>)
corresponds to the Bloch vector (sin 2phi, 0, cos 2phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functionals import InvalidN
from .scenario import Behavior, Scenario, behavior_from_correlators, make_correlators

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SX, SY, SZ])

STATE_TOL = 1e-12
PSD_TOL = 1e-10
UNIT_TOL = 1e-12


class InvalidState(ValueError):
    pass


class InvalidSetting(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Either the pure state cos(theta)|HH> + sin(theta)|VV> or a density operator."""

    theta: float | None = None
    rho: np.ndarray | None = None

    def __post_init__(self):
        if (self.theta is None) == (self.rho is None):
            raise InvalidState("give exactly one of theta or rho")
        if self.theta is not None:
            if not -STATE_TOL <= self.theta <= math.pi / 2 + STATE_TOL:
                raise InvalidState(f"theta = {self.theta} outside [0, pi/2]")
        else:
            _check_density(self.rho)

    @property
    def density(self) -> np.ndarray:
        return density_of(self)

    def to_json(self) -> dict:
        if self.theta is not None:
            return {"theta": self.theta}
        flat = self.rho.reshape(-1)
        return {"rho": np.column_stack([flat.real, flat.imag]).reshape(-1).tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "TwoQubitState":
        if "theta" in data:
            return pure_angle(float(data["theta"]))
        v = np.asarray(data["rho"], dtype=float).reshape(-1, 2)
        return from_density((v[:, 0] + 1j * v[:, 1]).reshape(4, 4))


def _check_density(rho: np.ndarray) -> None:
    if rho.shape != (4, 4):
        raise InvalidState(f"density operator must be 4x4, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > STATE_TOL:
        raise InvalidState("density operator is not Hermitian")
    if abs(np.trace(rho) - 1) > STATE_TOL:
        raise InvalidState(f"trace {np.trace(rho).real} != 1")
    if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
        raise InvalidState("density operator is not positive semidefinite")


def pure_angle(theta: float) -> TwoQubitState:
    return TwoQubitState(theta=float(theta))


MES = pure_angle(math.pi / 4)


def from_density(rho) -> TwoQubitState:
    rho = np.array(rho, dtype=complex)
    # exact Hermitian part; the check above already bounds the asymmetry
    rho = 0.5 * (rho + rho.conj().T)
    rho.setflags(write=False)
    return TwoQubitState(rho=rho)


def from_vector(psi) -> TwoQubitState:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return from_density(np.outer(psi, psi.conj()))


def density_of(s: TwoQubitState) -> np.ndarray:
    if s.rho is not None:
        return s.rho
    psi = np.array([math.cos(s.theta), 0, 0, math.sin(s.theta)], dtype=complex)
    return np.outer(psi, psi)


def bloch_data(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Correlation tensor T_ij = Tr[rho s_i x s_j] and the two local Bloch vectors."""
    r = rho.reshape(2, 2, 2, 2)
    # Tr[rho (P x Q)] = sum rho[a b, c d] P[c, a] Q[d, b]
    T = np.einsum("abcd,ica,jdb->ij", r, PAULI, PAULI).real
    rA = np.einsum("abcb,ica->i", r, PAULI).real
    rB = np.einsum("abad,jdb->j", r, PAULI).real
    return T, rA, rB


def schmidt_angle(s: TwoQubitState) -> float:
    """Entanglement angle in [pi/4, pi/2] of the dominant pure component.

    For cos(t)|HH> + sin(t)|VV> this is max(t, pi/2 - t); local unitaries
    cannot distinguish t from pi/2 - t.
    """
    rho = density_of(s)
    w, v = np.linalg.eigh(rho)
    psi = v[:, -1].reshape(2, 2)
    sv = np.linalg.svd(psi, compute_uv=False)
    return math.atan2(sv[0], sv[1])


@dataclass(frozen=True)
class NoiseModel:
    visibility: float = 1.0
    white_fraction: float = 0.0
    angle_jitter: float = 0.0

    def __post_init__(self):
        if not 0 <= self.visibility <= 1 or not 0 <= self.white_fraction <= 1:
            raise ValueError("visibility and white_fraction must lie in [0, 1]")
        if self.angle_jitter < 0:
            raise ValueError("angle_jitter must be nonnegative")


def dephase(rho: np.ndarray) -> np.ndarray:
    """Drop every coherence in the H/V basis."""
    return np.diag(np.diag(rho))


def apply_noise(s: TwoQubitState, nm: NoiseModel) -> TwoQubitState:
    if nm.visibility == 1:
        return s
    rho = density_of(s)
    noise = nm.white_fraction * np.eye(4) / 4 + (1 - nm.white_fraction) * dephase(rho)
    return from_density(nm.visibility * rho + (1 - nm.visibility) * noise)


def _unit_rows(vectors, label: str) -> np.ndarray:
    v = np.atleast_2d(np.array(vectors, dtype=float))
    if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] == 0:
        raise InvalidSetting(f"{label}: expected a non-empty list of 3-vectors")
    norms = np.linalg.norm(v, axis=1)
    if np.abs(norms - 1).max() > UNIT_TOL:
        raise InvalidSetting(f"{label}: Bloch vectors must have unit norm (got {norms})")
    v.setflags(write=False)
    return v


def normalize_rows(v) -> np.ndarray:
    v = np.atleast_2d(np.asarray(v, dtype=float))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class Strategy:
    state: TwoQubitState
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _unit_rows(self.A, "A"))
        object.__setattr__(self, "B", _unit_rows(self.B, "B"))

    @property
    def scenario(self) -> Scenario:
        return Scenario(len(self.A), len(self.B))

    def to_json(self) -> dict:
        return {**self.state.to_json(), "A": self.A.tolist(), "B": self.B.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Strategy":
        return cls(TwoQubitState.from_json(data), data["A"], data["B"])


def strategy_correlators(st: Strategy) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    T, rA, rB = bloch_data(density_of(st.state))
    return st.A @ T @ st.B.T, st.A @ rA, st.B @ rB


def behavior_of(st: Strategy) -> Behavior:
    """Born-rule behavior for projectors (1 +- v.sigma)/2 on each side."""
    E, EA, EB = strategy_correlators(st)
    return behavior_from_correlators(make_correlators(E, EA, EB))


def observable(v) -> np.ndarray:
    """The dichotomic observable v.sigma."""
    return np.einsum("i,ijk->jk", np.asarray(v, dtype=float), PAULI)


def polarization_vector(phi: float) -> np.ndarray:
    """Bloch vector of a linear-polarization measurement at angle phi (radians)."""
    return np.array([math.sin(2 * phi), 0.0, math.cos(2 * phi)])


def xz_vector(angle: float) -> np.ndarray:
    """Unit vector at Bloch angle ``angle`` from +z towards +x."""
    return np.array([math.sin(angle), 0.0, math.cos(angle)])


# -- measurement families ---------------------------------------------------

def circle_settings(theta: float) -> Strategy:
    """Settings on the maximally entangled state saturating S cos(theta) + S' sin(theta) = 2 sqrt 2."""
    chi = theta - 3 * math.pi / 4
    s, c = math.sin(chi), math.cos(chi)
    A = [[1, 0, 0], [0, 0, 1]]
    B = [[-c, 0, -s], [-s, 0, c]]
    return Strategy(MES, A, B)


def chained_settings(n: int) -> Strategy:
    """Optimal chained-inequality settings on the x-z great circle.

    Bob's vectors sit at even multiples of pi/(2n), Alice's at odd multiples,
    so the chain b_1, a_1, b_2, a_2, ..., b_n, a_n has uniform spacing.
    """
    if int(n) != n or n < 2:
        raise InvalidN(f"chained settings need n >= 2, got {n}")
    step = math.pi / (2 * n)
    A = [xz_vector((2 * x + 1) * step) for x in range(n)]
    B = [xz_vector(2 * y * step) for y in range(n)]
    return Strategy(MES, A, B)


def elegant_settings() -> Strategy:
    """Tetrahedron for Alice and the three axes for Bob on the maximally entangled state.

    Bob's second axis is -y: on |HH> + |VV> the correlation tensor is
    diag(1, -1, 1), and flipping y makes every term contribute +1/sqrt 3.
    """
    r = 1 / math.sqrt(3)
    A = [[r, r, r], [r, -r, -r], [-r, r, -r], [-r, -r, r]]
    B = [[1, 0, 0], [0, -1, 0], [0, 0, 1]]
    return Strategy(MES, A, B)
