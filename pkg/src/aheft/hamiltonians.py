"""Pauli-sum Hamiltonians, expectation values and exact ground states."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .errors import DomainError, NumericError, SizeError
from .quantum import MAX_QUBITS, PureState

DENSE_LIMIT = 10


@dataclass(frozen=True)
class PauliString:
    coefficient: float
    letters: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise DomainError("Pauli coefficient must be finite")
        if set(self.letters) - set("IXYZ"):
            raise DomainError(f"bad Pauli letters {self.letters!r}")

    def masks(self) -> tuple[int, int, int]:
        """(x_mask, z_mask, number of Y letters); qubit 0 is the top bit."""
        n = len(self.letters)
        x = z = ny = 0
        for q, c in enumerate(self.letters):
            bit = 1 << (n - 1 - q)
            if c in "XY":
                x |= bit
            if c in "ZY":
                z |= bit
            ny += c == "Y"
        return x, z, ny


def _popcount_parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    parity = np.zeros_like(v)
    while np.any(v):
        parity ^= v & 1
        v >>= 1
    return parity


def pauli_phases(term: PauliString, n: int) -> tuple[int, np.ndarray]:
    """Return (x_mask, w) with P|b> = w[b] |b ^ x_mask>."""
    x, z, ny = term.masks()
    b = np.arange(2**n, dtype=np.int64)
    sign = 1 - 2 * _popcount_parity(b & z)
    return x, (1j**ny) * sign.astype(complex)


@dataclass(frozen=True)
class PauliSum:
    n_qubits: int
    terms: tuple[PauliString, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if len(t.letters) != self.n_qubits:
                raise SizeError(
                    f"term {t.letters!r} has length {len(t.letters)}, expected {self.n_qubits}"
                )

    @classmethod
    def from_sparse(cls, n: int, spec: Sequence[tuple[float, dict[int, str]]]) -> "PauliSum":
        """Build from ``[(coef, {qubit: letter}), ...]``."""
        terms = []
        for coef, ops in spec:
            letters = ["I"] * n
            for q, c in ops.items():
                letters[q] = c
            terms.append(PauliString(float(coef), "".join(letters)))
        return cls(n, tuple(terms))

    @cached_property
    def groups(self) -> tuple[tuple[int, np.ndarray], ...]:
        """Terms merged by x_mask: H|b> = sum_x w_x[b] |b ^ x>."""
        acc: dict[int, np.ndarray] = {}
        for t in self.terms:
            x, w = pauli_phases(t, self.n_qubits)
            acc[x] = acc.get(x, 0) + t.coefficient * w
        return tuple(sorted(acc.items()))

    @cached_property
    def term_phases(self) -> tuple[tuple[int, np.ndarray], ...]:
        return tuple(pauli_phases(t, self.n_qubits) for t in self.terms)

    @cached_property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=float)

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        """H applied to the last axis of ``psi``."""
        out = np.zeros_like(psi, dtype=complex)
        idx = np.arange(2**self.n_qubits)
        for x, w in self.groups:
            out[..., idx ^ x] += w * psi
        return out

    def dense(self) -> np.ndarray:
        d = 2**self.n_qubits
        m = np.zeros((d, d), dtype=complex)
        idx = np.arange(d)
        for x, w in self.groups:
            m[idx ^ x, idx] += w
        return m


def build_tfim(n_qubits: int) -> PauliSum:
    """-sum Z_i Z_{i+1 mod N} - sum X_i (J = h = 1), terms kept un-merged."""
    if n_qubits < 2:
        raise DomainError("TFIM needs at least 2 qubits")
    n = n_qubits
    spec = [(-1.0, {i: "Z", (i + 1) % n: "Z"}) for i in range(n)]
    spec += [(-1.0, {i: "X"}) for i in range(n)]
    return PauliSum.from_sparse(n, spec)


def build_xxz(n_qubits: int) -> PauliSum:
    """sum (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1}) with periodic wrap."""
    if n_qubits < 2:
        raise DomainError("XXZ needs at least 2 qubits")
    n = n_qubits
    spec = [(1.0, {i: c, (i + 1) % n: c}) for i in range(n) for c in "XYZ"]
    return PauliSum.from_sparse(n, spec)


def build_hamiltonian(name: str, n_qubits: int) -> PauliSum:
    name = name.lower()
    if name == "tfim":
        return build_tfim(n_qubits)
    if name == "xxz":
        return build_xxz(n_qubits)
    raise DomainError(f"unknown Hamiltonian {name!r}")


def op_norm_bound(h: PauliSum) -> float:
    return float(np.sum(np.abs(h.coefficients)))


def expectation(h: PauliSum, state: PureState | np.ndarray) -> float:
    """<psi|H|psi> by term-group Pauli action on amplitudes."""
    if isinstance(state, PureState):
        if state.n_qubits != h.n_qubits:
            raise SizeError(f"state has {state.n_qubits} qubits, H has {h.n_qubits}")
        psi = state.amplitudes
    else:
        psi = state
        if psi.shape[-1] != 2**h.n_qubits:
            raise SizeError("amplitude length does not match Hamiltonian")
    vals = expectation_batch(h, psi[None, :])
    return float(vals[0])


def expectation_batch(h: PauliSum, psi: np.ndarray) -> np.ndarray:
    """Row-wise <psi_b|H|psi_b> for a (B, 2**n) batch."""
    idx = np.arange(psi.shape[-1])
    total = np.zeros(psi.shape[0], dtype=complex)
    for x, w in h.groups:
        total += np.einsum("bi,bi->b", psi[:, idx ^ x].conj(), w * psi)
    return total.real


def term_expectations_batch(h: PauliSum, psi: np.ndarray) -> np.ndarray:
    """(B, n_terms) array of <P_k> for each row; no coefficients applied."""
    idx = np.arange(psi.shape[-1])
    out = np.empty((psi.shape[0], len(h.terms)))
    for k, (x, w) in enumerate(h.term_phases):
        out[:, k] = np.einsum("bi,bi->b", psi[:, idx ^ x].conj(), w * psi).real
    return out


def expectation_mixed_batch(h: PauliSum, rho: np.ndarray) -> np.ndarray:
    """Row-wise Tr(rho_b H) for a (B, D, D) batch."""
    d = rho.shape[-1]
    idx = np.arange(d)
    total = np.zeros(rho.shape[0], dtype=complex)
    for x, w in h.groups:
        # Tr(rho P) = sum_b w[b] rho[b, b ^ x]
        total += (rho[:, idx, idx ^ x] * w).sum(axis=1)
    return total.real


@dataclass(frozen=True)
class GroundSolution:
    energy: float
    basis: tuple[PureState, ...]
    degeneracy_tol: float = 1e-9

    @property
    def degeneracy(self) -> int:
        return len(self.basis)

    def projection_weight(self, state: PureState) -> float:
        """Squared norm of the projection of ``state`` onto the ground space."""
        if state.n_qubits != self.basis[0].n_qubits:
            raise SizeError("state dimension differs from ground space")
        a = state.amplitudes
        return float(sum(abs(np.vdot(b.amplitudes, a)) ** 2 for b in self.basis))


def ground_state(h: PauliSum, degeneracy_tol: float = 1e-9, k: int = 6) -> GroundSolution:
    """Lowest eigenvalue and an orthonormal basis of its eigenspace.

    Dense ``eigh`` up to 10 qubits; Lanczos (ARPACK) on a matrix-free operator above.
    The degeneracy window is ``degeneracy_tol`` times the spectral range.
    """
    n = h.n_qubits
    if n > MAX_QUBITS:
        raise SizeError(f"ground_state supports at most {MAX_QUBITS} qubits")
    if n <= DENSE_LIMIT:
        w, v = scipy.linalg.eigh(h.dense())
        span = max(w[-1] - w[0], 1.0)
    else:
        d = 2**n
        op = spla.LinearOperator((d, d), matvec=lambda x: h.matvec(np.ravel(x)), dtype=complex)
        k = min(k, d - 2)
        try:
            w, v = spla.eigsh(op, k=k, which="SA", tol=1e-12, maxiter=20 * d)
        except spla.ArpackNoConvergence as exc:
            raise NumericError(
                f"Lanczos did not converge: {len(exc.eigenvalues)} of {k} eigenpairs found"
            ) from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        span = max(op_norm_bound(h), 1.0)
    e0 = w[0]
    sel = np.nonzero(w - e0 <= degeneracy_tol * span)[0]
    basis_vecs, _ = np.linalg.qr(v[:, sel])
    basis = tuple(PureState(n, basis_vecs[:, i]) for i in range(len(sel)))
    return GroundSolution(float(e0), basis, degeneracy_tol)


def reference_gap(h: PauliSum, gs: GroundSolution | None = None) -> float:
    """1 - squared norm of the projection of |0^N> onto the ground space."""
    gs = ground_state(h) if gs is None else gs
    weight = sum(abs(b.amplitudes[0]) ** 2 for b in gs.basis)
    return float(min(1.0, max(0.0, 1.0 - weight)))
