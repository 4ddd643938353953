"""Observables aggregated by the experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .ansatz import AnsatzSpec, sample_params
from .errors import DomainError, SizeError
from .gradients import statevectors
from .hamiltonians import GroundSolution
from .quantum import PureState, reduced_density, vn_entropy

# Haar-limit constant quoted alongside the purity plot; metadata only.
HAAR_PURITY_QUOTED = "2/(2^N+1)"


@dataclass
class GVReport:
    """Gradient statistics over seeds.

    ``mean_sq_norm`` is the seed mean of ||grad||^2; ``mean_sq_component``
    divides it by the parameter count, which is the scale plotted in the
    gradient-variance figures.
    """

    mean_sq_norm: float
    per_param_variance: np.ndarray
    n_seeds: int
    std_err: float
    n_params: int

    @property
    def mean_sq_component(self) -> float:
        return self.mean_sq_norm / self.n_params

    @property
    def std_err_component(self) -> float:
        return self.std_err / self.n_params

    def to_dict(self) -> dict:
        return {
            "mean_sq_norm": self.mean_sq_norm,
            "std_err": self.std_err,
            "mean_sq_component": self.mean_sq_component,
            "std_err_component": self.std_err_component,
            "mean_param_variance": float(np.mean(self.per_param_variance)),
            "n_seeds": self.n_seeds,
            "n_params": self.n_params,
        }


def gv_report(gradients: Sequence) -> GVReport:
    g = np.asarray([np.asarray(x, dtype=float) for x in gradients])
    if g.ndim != 2 or g.shape[0] < 2:
        raise DomainError("gv_report needs at least two equal-length gradients")
    sq = np.sum(g * g, axis=1)
    n = g.shape[0]
    return GVReport(
        mean_sq_norm=float(np.mean(sq)),
        per_param_variance=np.var(g, axis=0, ddof=1),
        n_seeds=n,
        std_err=float(np.std(sq, ddof=1) / math.sqrt(n)),
        n_params=g.shape[1],
    )


def _amps(state) -> np.ndarray:
    return state.amplitudes if isinstance(state, PureState) else np.asarray(state)


def effective_dimension(state, eps_thr: float = 1e-6) -> int:
    """Number of basis amplitudes whose magnitude exceeds ``eps_thr``."""
    if eps_thr <= 0:
        raise DomainError("eps_thr must be positive")
    return int(np.count_nonzero(np.abs(_amps(state)) > eps_thr))


def fidelity_to_ground(state: PureState, gs: GroundSolution) -> float:
    return min(1.0, max(0.0, gs.projection_weight(state)))


def half_chain_entropy(state: PureState) -> float:
    """Entanglement entropy (bits) across the cut after qubit floor(N/2) - 1."""
    n = state.n_qubits
    return vn_entropy(reduced_density(state, range(n // 2)))


def pairwise_purity(states: np.ndarray) -> float:
    """Mean of |<psi_i|psi_j>|^2 over ordered pairs i != j.

    Unbiased for Tr(rho_ens^2) where rho_ens is the ensemble-average state.
    """
    states = np.asarray(states)
    k = states.shape[0]
    if k < 2:
        raise DomainError("need at least two states")
    gram = states.conj() @ states.T
    g2 = np.abs(gram) ** 2
    return float((g2.sum() - np.trace(g2)) / (k * (k - 1)))


def expressibility_purity(
    spec: AnsatzSpec,
    sampler: str,
    n_samples: int,
    rng: np.random.Generator,
    sigma: float = 0.0,
) -> float:
    """Ensemble purity of U(theta)|0^N> with theta from ``sampler``.

    ``sampler`` is "gaussian" (scale ``sigma``) or "uniform" on [0, 2 pi).
    """
    if n_samples < 2:
        raise DomainError("n_samples must be >= 2")
    thetas = sample_params(spec, sampler, sigma, n_samples, rng)
    return pairwise_purity(statevectors(spec, thetas))


def hamming_weights(n: int) -> np.ndarray:
    b = np.arange(2**n)
    return np.array([bin(x).count("1") for x in b])


@dataclass
class AmplitudeBoundReport:
    max_ratio: float
    violating_weight: Optional[int]
    ratios: list

    def to_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "violating_weight": self.violating_weight,
            "ratios": self.ratios,
        }


def amplitude_bound_report(state: PureState, m_tot: int, sigma: float) -> AmplitudeBoundReport:
    """Compare max |amplitude| at each Hamming weight w >= 1 with (m_tot sigma)^w / w!.

    Diagnostic only: ``violating_weight`` is the lowest weight whose ratio
    exceeds 1, if any.
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    amps = np.abs(_amps(state))
    n = int(round(math.log2(amps.size)))
    if 2**n != amps.size:
        raise SizeError("amplitude vector length is not a power of two")
    wt = hamming_weights(n)
    x = m_tot * sigma
    ratios = []
    for w in range(1, n + 1):
        bound = math.exp(w * math.log(x) - math.lgamma(w + 1))
        ratios.append(float(amps[wt == w].max() / bound))
    max_ratio = max(ratios) if ratios else 0.0
    viol = next((w for w, r in enumerate(ratios, start=1) if r > 1.0), None)
    return AmplitudeBoundReport(float(max_ratio), viol, ratios)
