"""Exact pure-state and density-matrix simulation of the {RY, RZ, CNOT} gate set.

Basis convention: qubit 0 is the most-significant bit of the amplitude index.
Rotations follow RY(t) = exp(-i t Y / 2) and RZ(t) = exp(-i t Z / 2).

Internally every kernel works on a batch array of shape ``(B, 2**m)`` where
``m`` is the number of tensor legs (``n`` for state vectors, ``2n`` for
density matrices: rows first, then columns).  Kernels mutate in place; the
public helpers copy first.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, QubitIndexError, ResourceError, SizeError

MAX_QUBITS = 14
MAX_MIXED_QUBITS = 10

GATE_KINDS = ("RY", "RZ", "CNOT")


@dataclass
class PureState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise SizeError(
                f"expected {2**self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass
class MixedState:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = 2**self.n_qubits
        if self.matrix.shape != (d, d):
            raise SizeError(f"expected a {d}x{d} matrix, got {self.matrix.shape}")


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise DomainError(f"unknown gate kind {self.kind!r}")
        want = 2 if self.kind == "CNOT" else 1
        if len(self.qubits) != want:
            raise QubitIndexError(f"{self.kind} takes {want} qubit index(es), got {self.qubits}")
        if self.kind == "CNOT" and self.qubits[0] == self.qubits[1]:
            raise QubitIndexError("CNOT control and target must differ")

    def check(self, n_qubits: int) -> None:
        for q in self.qubits:
            if not 0 <= q < n_qubits:
                raise QubitIndexError(f"qubit {q} out of range for {n_qubits} qubits")


# ---------------------------------------------------------------------------
# batched in-place kernels


def _leg_view(x: np.ndarray, m: int, k: int) -> np.ndarray:
    return x.reshape(x.shape[0], 2**k, 2, 2 ** (m - k - 1))


def _angles(theta, batch: int) -> np.ndarray:
    a = np.asarray(theta, dtype=float)
    if a.ndim == 0:
        a = np.full(batch, float(a))
    return a[:, None, None]


def _ry_leg(x: np.ndarray, m: int, k: int, theta) -> None:
    v = _leg_view(x, m, k)
    half = 0.5 * _angles(theta, x.shape[0])
    c, s = np.cos(half), np.sin(half)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :]
    v[:, :, 0, :] = c * a0 - s * a1
    v[:, :, 1, :] = s * a0 + c * a1


def _rz_leg(x: np.ndarray, m: int, k: int, phi, conj: bool = False) -> None:
    v = _leg_view(x, m, k)
    ph = np.exp(-0.5j * _angles(phi, x.shape[0]))
    if conj:
        ph = ph.conj()
    v[:, :, 0, :] *= ph
    v[:, :, 1, :] *= ph.conj()


def _cnot_legs(x: np.ndarray, m: int, control: int, target: int) -> None:
    t = x.reshape((x.shape[0],) + (2,) * m)
    i10 = [slice(None)] * (m + 1)
    i11 = [slice(None)] * (m + 1)
    i10[1 + control] = i11[1 + control] = 1
    i10[1 + target], i11[1 + target] = 0, 1
    i10, i11 = tuple(i10), tuple(i11)
    tmp = t[i10].copy()
    t[i10] = t[i11]
    t[i11] = tmp


def _depolarize_full(x: np.ndarray, n: int, q: int) -> None:
    """Replace qubit ``q`` of each density matrix by I/2 (keeps the rest)."""
    L, R = 2**q, 2 ** (n - q - 1)
    v = x.reshape(x.shape[0], L, 2, R, L, 2, R)
    tr = v[:, :, 0, :, :, 0, :] + v[:, :, 1, :, :, 1, :]
    v[...] = 0.0
    v[:, :, 0, :, :, 0, :] = 0.5 * tr
    v[:, :, 1, :, :, 1, :] = 0.5 * tr


def _depolarize_pair(x: np.ndarray, n: int, i: int, j: int, p: float) -> None:
    if p == 0.0:
        return
    full = x.copy()
    _depolarize_full(full, n, i)
    _depolarize_full(full, n, j)
    x *= 1.0 - p
    x += p * full


# ---------------------------------------------------------------------------
# batched program execution
#
# A program is a sequence of instructions ``(kind, qubits, param)`` where
# ``param`` indexes a column of the parameter batch (or is None for CNOT).
# Kind "ZZ" is the CNOT-RZ-CNOT entangler on (i, j).


def _apply_pure(x: np.ndarray, n: int, kind: str, qubits, angle) -> None:
    if kind == "RY":
        _ry_leg(x, n, qubits[0], angle)
    elif kind == "RZ":
        _rz_leg(x, n, qubits[0], angle)
    elif kind == "CNOT":
        _cnot_legs(x, n, qubits[0], qubits[1])
    elif kind == "ZZ":
        i, j = qubits
        _cnot_legs(x, n, i, j)
        _rz_leg(x, n, j, angle)
        _cnot_legs(x, n, i, j)
    else:
        raise DomainError(f"unknown instruction {kind!r}")


def _apply_mixed(x: np.ndarray, n: int, kind: str, qubits, angle, p: float) -> None:
    m = 2 * n
    if kind == "RY":
        _ry_leg(x, m, qubits[0], angle)
        _ry_leg(x, m, n + qubits[0], angle)
    elif kind == "RZ":
        _rz_leg(x, m, qubits[0], angle)
        _rz_leg(x, m, n + qubits[0], angle, conj=True)
    elif kind == "CNOT":
        c, t = qubits
        _cnot_legs(x, m, c, t)
        _cnot_legs(x, m, n + c, n + t)
        _depolarize_pair(x, n, c, t, p)
    elif kind == "ZZ":
        i, j = qubits
        _apply_mixed(x, n, "CNOT", (i, j), None, p)
        _apply_mixed(x, n, "RZ", (j,), angle, p)
        _apply_mixed(x, n, "CNOT", (i, j), None, p)
    else:
        raise DomainError(f"unknown instruction {kind!r}")


def run_program_pure(n: int, program: Sequence, thetas: np.ndarray) -> np.ndarray:
    """Apply ``program`` to |0^n> for every row of ``thetas``; returns (B, 2**n)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    x = np.zeros((thetas.shape[0], 2**n), dtype=complex)
    x[:, 0] = 1.0
    for kind, qubits, param in program:
        _apply_pure(x, n, kind, qubits, None if param is None else thetas[:, param])
    return x


def run_program_mixed(n: int, program: Sequence, thetas: np.ndarray, p: float) -> np.ndarray:
    """Density-matrix counterpart of :func:`run_program_pure`; returns (B, D, D)."""
    if n > MAX_MIXED_QUBITS:
        raise ResourceError(
            f"density-matrix simulation is capped at {MAX_MIXED_QUBITS} qubits (got {n})"
        )
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    d = 2**n
    x = np.zeros((thetas.shape[0], d * d), dtype=complex)
    x[:, 0] = 1.0
    for kind, qubits, param in program:
        _apply_mixed(x, n, kind, qubits, None if param is None else thetas[:, param], p)
    return x.reshape(-1, d, d)


# ---------------------------------------------------------------------------
# public single-state API


def _check_n(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


def _check_pair(n: int, i: int, j: int) -> None:
    for q in (i, j):
        if not 0 <= q < n:
            raise QubitIndexError(f"qubit {q} out of range for {n} qubits")
    if i == j:
        raise QubitIndexError("pair qubits must differ")


def zero_state(n_qubits: int) -> PureState:
    _check_n(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return PureState(n_qubits, amps)


def basis_state(bits: str) -> PureState:
    """|b_0 b_1 ...>, with ``bits[0]`` the qubit-0 value."""
    n = len(bits)
    _check_n(n)
    amps = np.zeros(2**n, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return PureState(n, amps)


def apply_gate(state: PureState, gate: GateOp) -> PureState:
    gate.check(state.n_qubits)
    x = state.amplitudes.copy()[None, :]
    _apply_pure(x, state.n_qubits, gate.kind, gate.qubits, gate.angle)
    return PureState(state.n_qubits, x[0])


def apply_gates(state: PureState, gates: Iterable[GateOp]) -> PureState:
    for g in gates:
        state = apply_gate(state, g)
    return state


def apply_zz_entangler(state: PureState, i: int, j: int, phi: float) -> PureState:
    """exp(-i phi Z_i Z_j / 2) as CNOT(i,j) RZ_j(phi) CNOT(i,j)."""
    _check_pair(state.n_qubits, i, j)
    for g in (GateOp("CNOT", (i, j)), GateOp("RZ", (j,), phi), GateOp("CNOT", (i, j))):
        state = apply_gate(state, g)
    return state


def to_density(state: PureState) -> MixedState:
    a = state.amplitudes
    return MixedState(state.n_qubits, np.outer(a, a.conj()))


def apply_gate_mixed(rho: MixedState, gate: GateOp, p: float = 0.0) -> MixedState:
    """U rho U^dagger; CNOTs are followed by the pair depolarizing channel at rate ``p``."""
    gate.check(rho.n_qubits)
    n = rho.n_qubits
    x = rho.matrix.reshape(1, -1).copy()
    _apply_mixed(x, n, gate.kind, gate.qubits, gate.angle, p)
    return MixedState(n, x.reshape(2**n, 2**n))


def apply_depolarizing_pair(rho: MixedState, i: int, j: int, p: float) -> MixedState:
    """(1-p) rho + p (I_4/4 on the pair) (x) Tr_pair(rho)."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"depolarizing probability must lie in [0, 1], got {p}")
    n = rho.n_qubits
    _check_pair(n, i, j)
    x = rho.matrix.reshape(1, -1).copy()
    _depolarize_pair(x, n, i, j, float(p))
    return MixedState(n, x.reshape(2**n, 2**n))


def reduced_density(state: PureState, keep: Iterable[int]) -> MixedState:
    keep = sorted(set(int(q) for q in keep))
    n = state.n_qubits
    if not keep:
        raise DomainError("keep set must be nonempty")
    for q in keep:
        if not 0 <= q < n:
            raise QubitIndexError(f"qubit {q} out of range for {n} qubits")
    traced = [q for q in range(n) if q not in keep]
    psi = state.amplitudes.reshape((2,) * n).transpose(keep + traced)
    psi = psi.reshape(2 ** len(keep), 2 ** len(traced))
    return MixedState(len(keep), psi @ psi.conj().T)


def vn_entropy(rho: MixedState) -> float:
    """Von Neumann entropy in bits."""
    w = np.linalg.eigvalsh(0.5 * (rho.matrix + rho.matrix.conj().T))
    w = np.clip(w, 0.0, None)
    w = w[w > 1e-12]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def purity(rho: MixedState) -> float:
    m = rho.matrix
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.vdot(m, m).real)


def overlap(a: PureState, b: PureState) -> complex:
    if a.n_qubits != b.n_qubits:
        raise SizeError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: PureState, b: PureState) -> float:
    """Phase-insensitive |<a|b>|^2."""
    return abs(overlap(a, b)) ** 2
