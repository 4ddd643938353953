"""Energies and parameter-shift gradients, exact and finite-shot.

Every generator in the gate set (Y/2, Z/2 and the entangler's ZZ/2) has
eigenvalues +-1/2, so the two-term rule with shifts of +-pi/2 is exact for
rotation and entangler angles alike.
"""
from __future__ import annotations

import numpy as np

from .ansatz import AnsatzSpec, _check_theta
from .errors import DomainError, NumericError, ResourceError
from .hamiltonians import (
    PauliSum,
    expectation_batch,
    expectation_mixed_batch,
    term_expectations_batch,
)
from .quantum import MAX_MIXED_QUBITS, PureState, run_program_mixed, run_program_pure

SHIFT = np.pi / 2
_CHUNK_ELEMS = 1 << 21


def _chunks(n_rows: int, row_elems: int):
    step = max(1, _CHUNK_ELEMS // row_elems)
    for lo in range(0, n_rows, step):
        yield slice(lo, min(n_rows, lo + step))


def statevectors(spec: AnsatzSpec, thetas) -> np.ndarray:
    """(B, 2**N) output amplitudes of U(theta)|0^N> for each row of ``thetas``."""
    thetas = np.atleast_2d(_check_theta(spec, thetas))
    d = 2**spec.n_qubits
    out = np.empty((thetas.shape[0], d), dtype=complex)
    for sl in _chunks(thetas.shape[0], d):
        out[sl] = run_program_pure(spec.n_qubits, spec.program, thetas[sl])
    return out


def statevector(spec: AnsatzSpec, theta) -> PureState:
    return PureState(spec.n_qubits, statevectors(spec, theta)[0])


def density_matrices(spec: AnsatzSpec, thetas, noise_p: float) -> np.ndarray:
    thetas = np.atleast_2d(_check_theta(spec, thetas))
    d = 2**spec.n_qubits
    out = np.empty((thetas.shape[0], d, d), dtype=complex)
    for sl in _chunks(thetas.shape[0], d * d):
        out[sl] = run_program_mixed(spec.n_qubits, spec.program, thetas[sl], noise_p)
    return out


def _check_noise(spec: AnsatzSpec, noise_p: float) -> None:
    if not 0.0 <= noise_p <= 1.0:
        raise DomainError(f"noise probability must lie in [0, 1], got {noise_p}")
    if noise_p > 0 and spec.n_qubits > MAX_MIXED_QUBITS:
        raise ResourceError(
            f"noisy simulation is capped at {MAX_MIXED_QUBITS} qubits (got {spec.n_qubits})"
        )


def energies(
    spec: AnsatzSpec, thetas, h: PauliSum, noise_p: float = 0.0, force_mixed: bool = False
) -> np.ndarray:
    """Cost for each row of ``thetas``.

    ``noise_p == 0`` uses the state-vector path unless ``force_mixed`` is set.
    """
    _check_noise(spec, noise_p)
    thetas = np.atleast_2d(_check_theta(spec, thetas))
    d = 2**spec.n_qubits
    out = np.empty(thetas.shape[0])
    if noise_p > 0 or force_mixed:
        for sl in _chunks(thetas.shape[0], d * d):
            rho = run_program_mixed(spec.n_qubits, spec.program, thetas[sl], noise_p)
            out[sl] = expectation_mixed_batch(h, rho)
    else:
        for sl in _chunks(thetas.shape[0], d):
            psi = run_program_pure(spec.n_qubits, spec.program, thetas[sl])
            out[sl] = expectation_batch(h, psi)
    return out


def energy(spec: AnsatzSpec, theta, h: PauliSum, noise_p: float = 0.0) -> float:
    return float(energies(spec, theta, h, noise_p)[0])


def shifted_thetas(theta: np.ndarray) -> np.ndarray:
    """Rows: theta, then theta + pi/2 e_j for all j, then theta - pi/2 e_j."""
    p = theta.shape[0]
    shifts = SHIFT * np.eye(p)
    return np.vstack([theta[None, :], theta + shifts, theta - shifts])


def energy_and_gradient(spec: AnsatzSpec, theta, h: PauliSum, noise_p: float = 0.0):
    """(C(theta), parameter-shift gradient) from one batched evaluation."""
    theta = _check_theta(spec, theta)
    p = theta.shape[0]
    e = energies(spec, shifted_thetas(theta), h, noise_p)
    grad = 0.5 * (e[1 : p + 1] - e[p + 1 :])
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient")
    return float(e[0]), grad


def gradient_exact(spec: AnsatzSpec, theta, h: PauliSum, noise_p: float = 0.0) -> np.ndarray:
    return energy_and_gradient(spec, theta, h, noise_p)[1]


def sampled_energies(
    spec: AnsatzSpec, thetas, h: PauliSum, shots: int, rngs
) -> np.ndarray:
    """Finite-shot cost estimates, one generator per row.

    Each Pauli term is measured ``shots`` times independently: the +1 outcome
    has probability (1 + <P>)/2 and the term estimate is 2k/M - 1.
    """
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    psi = statevectors(spec, thetas)
    exp_terms = term_expectations_batch(h, psi)
    prob_up = np.clip(0.5 * (1.0 + exp_terms), 0.0, 1.0)
    coeffs = h.coefficients
    out = np.empty(psi.shape[0])
    for r, g in enumerate(rngs):
        k = g.binomial(shots, prob_up[r])
        out[r] = coeffs @ (2.0 * k / shots - 1.0)
    return out


def gradient_sampled(
    spec: AnsatzSpec, theta, h: PauliSum, shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Parameter-shift gradient with each shifted cost estimated from ``shots`` shots.

    Shifted circuits draw from independent substreams spawned off ``rng`` in a
    fixed order, so results do not depend on evaluation order.
    """
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    theta = _check_theta(spec, theta)
    p = theta.shape[0]
    rows = shifted_thetas(theta)[1:]
    e = sampled_energies(spec, rows, h, shots, rng.spawn(2 * p))
    return 0.5 * (e[:p] - e[p:])
