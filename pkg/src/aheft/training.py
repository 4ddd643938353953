"""Initialization schedule, theory constants, Adam and the training loops.

The adaptive protocol runs in two phases.  Phase I is plain Adam descent from
a Gaussian initialization at ``sigma0 = kappa / (L N)``.  Once the gradient norm
drops below ``delta_switch`` (after a burn-in), Phase II adds a Gaussian kick
of variance ``sigma(t)^2 - sigma(t-1)^2`` before every Adam step, where
``sigma(t)`` grows exponentially from ``sigma0`` and is clamped at
``sigma_crit = c2 / sqrt(L N)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .ansatz import AnsatzKind, AnsatzSpec, init_params
from .errors import DomainError, NumericError, SizeError
from .gradients import energy_and_gradient, statevectors
from .hamiltonians import PauliSum, op_norm_bound

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class ScheduleConfig:
    kappa: float = 0.1
    lam: float = 0.02
    c1: float = 2.0
    c2: float = 0.5
    delta_switch: float = 1e-3
    burn_in: int = 10
    total_steps: int = 200
    phase1_cap: int = 100
    eta: float = 0.01

    def __post_init__(self):
        if self.kappa <= 0 or self.c2 <= 0 or self.delta_switch <= 0:
            raise DomainError("kappa, c2 and delta_switch must be positive")
        if self.lam < 0:
            raise DomainError("lambda must be non-negative")
        if self.burn_in < 0 or self.total_steps < 0:
            raise DomainError("burn_in and total_steps must be non-negative")
        if self.phase1_cap > self.total_steps:
            raise DomainError("phase1_cap may not exceed total_steps")
        if self.burn_in > self.phase1_cap:
            raise DomainError("burn_in may not exceed phase1_cap")

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "lambda": self.lam,
            "c1": self.c1,
            "c2": self.c2,
            "delta_switch": self.delta_switch,
            "burn_in": self.burn_in,
            "total_steps": self.total_steps,
            "phase1_cap": self.phase1_cap,
            "eta": self.eta,
        }


# ---------------------------------------------------------------------------
# schedule and constants


def sigma_zero(n: int, layers: int, kappa: float = 0.1) -> float:
    if n < 1 or layers < 1:
        raise DomainError("N and L must be >= 1")
    return kappa / (layers * n)


def sigma_crit(n: int, layers: int, c2: float = 0.5) -> float:
    if n < 1 or layers < 1:
        raise DomainError("N and L must be >= 1")
    return c2 / math.sqrt(layers * n)


def sigma_schedule(t: int, t_switch: Optional[int], sigma0: float, lam: float, s_crit: float) -> float:
    """sigma0 before the switch, min(sigma0 exp(lam (t - t_switch)), s_crit) after."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t_switch is None or t < t_switch:
        return sigma0
    return min(sigma0 * math.exp(lam * (t - t_switch)), s_crit)


def clamp_step(sigma0: float, lam: float, s_crit: float) -> Optional[int]:
    """Smallest t - t_switch at which the schedule hits the clamp (None if never)."""
    if sigma0 >= s_crit:
        return 0
    if lam <= 0:
        return None
    return math.ceil(math.log(s_crit / sigma0) / lam)


def theory_constants(n: int, layers: int, c1: float = 2.0, c2: float = 0.5, B: float | None = None) -> dict:
    """Diagnostic constants of the critical-cutoff analysis.

    ``delta_eff = 3 c1 c2 sqrt(LN)``, ``w_max = floor(delta_eff)`` and
    ``kappa_lb = B^2 w_max^2 / (4 e^2 N^2)``.  ``B`` defaults to 2N.
    """
    if min(n, layers, c1, c2) <= 0:
        raise DomainError("theory constants need positive inputs")
    B = 2.0 * n if B is None else float(B)
    ln = layers * n
    delta_eff = 3.0 * c1 * c2 * math.sqrt(ln)
    w_max = math.floor(delta_eff + 1e-9)
    kappa_lb = B**2 * w_max**2 / (4.0 * math.e**2 * n**2)
    return {
        "N": n,
        "L": layers,
        "c1": c1,
        "c2": c2,
        "B": B,
        "sigma0_kappa_0.1": sigma_zero(n, layers, 0.1),
        "sigma_crit": sigma_crit(n, layers, c2),
        "delta_eff": delta_eff,
        "w_max": w_max,
        "kappa_lb": kappa_lb,
        "variance_lower_bound": kappa_lb / ln**2,
        "bp_variance_upper_bound": B**2 * 2.0 ** (-(n - 1)),
        # union bound over 2LN parameters of P[|theta_k| > 3 sigma]
        "three_sigma_union_bound": 4.0 * ln * math.exp(-4.5),
    }


# ---------------------------------------------------------------------------
# optimizer state


class Phase(str, enum.Enum):
    ONE = "ONE"
    TWO = "TWO"


@dataclass
class TrainState:
    theta: np.ndarray
    adam_m: np.ndarray
    adam_v: np.ndarray
    t: int = 0
    phase: Phase = Phase.ONE
    sigma_current: float = 0.0
    t_switch: Optional[int] = None

    @classmethod
    def fresh(cls, theta: np.ndarray, sigma: float = 0.0) -> "TrainState":
        theta = np.asarray(theta, dtype=float)
        return cls(theta, np.zeros_like(theta), np.zeros_like(theta), 0, Phase.ONE, sigma)


def adam_step(
    state: TrainState,
    grad,
    eta: float = 0.01,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> TrainState:
    """One bias-corrected Adam update; returns a new state with ``t`` advanced."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.theta.shape:
        raise SizeError(f"gradient shape {grad.shape} != parameter shape {state.theta.shape}")
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient passed to Adam")
    m = beta1 * state.adam_m + (1.0 - beta1) * grad
    v = beta2 * state.adam_v + (1.0 - beta2) * grad * grad
    k = state.t + 1
    m_hat = m / (1.0 - beta1**k)
    v_hat = v / (1.0 - beta2**k)
    theta = state.theta - eta * m_hat / (np.sqrt(v_hat) + eps)
    return replace(state, theta=theta, adam_m=m, adam_v=v, t=k)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class TrajectoryRecord:
    method: str
    energy: list = field(default_factory=list)
    grad_norm2: list = field(default_factory=list)
    sigma: list = field(default_factory=list)
    d_eff: list = field(default_factory=list)
    final_theta: Optional[np.ndarray] = None
    t_switch: Optional[int] = None
    forced_switch: bool = False
    failed: bool = False
    error: Optional[str] = None

    def __len__(self) -> int:
        return len(self.energy)

    @property
    def final_energy(self) -> float:
        return self.energy[-1]

    def to_dict(self, include_theta: bool = True) -> dict:
        out = {
            "method": self.method,
            "energy": [float(e) for e in self.energy],
            "grad_norm2": [float(g) for g in self.grad_norm2],
            "sigma": [None if s is None else float(s) for s in self.sigma],
            "d_eff": [None if d is None else int(d) for d in self.d_eff],
            "t_switch": self.t_switch,
            "forced_switch": self.forced_switch,
            "failed": self.failed,
            "error": self.error,
        }
        if include_theta and self.final_theta is not None:
            out["final_theta"] = [float(x) for x in self.final_theta]
        return out


def _d_eff(spec: AnsatzSpec, theta, thr: float) -> int:
    amps = statevectors(spec, theta)[0]
    return int(np.count_nonzero(np.abs(amps) > thr))


def _descend(
    spec: AnsatzSpec,
    h: PauliSum,
    config: ScheduleConfig,
    rng: np.random.Generator,
    theta0: np.ndarray,
    method: str,
    adaptive: bool,
    sigma0: Optional[float],
    noise_p: float,
    deff_every: Optional[int],
    deff_thr: float,
) -> TrajectoryRecord:
    T = config.total_steps
    s_crit = sigma_crit(spec.n_qubits, spec.layers, config.c2)
    state = TrainState.fresh(theta0, sigma0 or 0.0)
    rec = TrajectoryRecord(method)

    def log(t, e, g):
        rec.energy.append(e)
        rec.grad_norm2.append(float(g @ g))
        rec.sigma.append(state.sigma_current if sigma0 is not None else None)
        want = deff_every is not None and (t % deff_every == 0 or t == T)
        rec.d_eff.append(_d_eff(spec, state.theta, deff_thr) if want else None)

    try:
        for t in range(T):
            if state.phase is Phase.TWO:
                s_new = sigma_schedule(t, state.t_switch, sigma0, config.lam, s_crit)
                s_prev = sigma_schedule(t - 1, state.t_switch, sigma0, config.lam, s_crit)
                var = s_new * s_new - s_prev * s_prev
                if var > 0.0:
                    xi = rng.normal(0.0, math.sqrt(var), size=state.theta.shape)
                    state = replace(state, theta=state.theta + xi)
                state = replace(state, sigma_current=s_new)
            e, g = energy_and_gradient(spec, state.theta, h, noise_p)
            if adaptive and state.phase is Phase.ONE:
                converged = t >= config.burn_in and math.sqrt(g @ g) < config.delta_switch
                if converged or t >= config.phase1_cap:
                    state = replace(state, phase=Phase.TWO, t_switch=t)
                    rec.t_switch = t
                    rec.forced_switch = not converged
            log(t, e, g)
            state = adam_step(state, g, config.eta)
        e, g = energy_and_gradient(spec, state.theta, h, noise_p)
        if state.phase is Phase.TWO:
            state = replace(
                state, sigma_current=sigma_schedule(T, state.t_switch, sigma0, config.lam, s_crit)
            )
        log(T, e, g)
    except NumericError as exc:
        rec.failed = True
        rec.error = str(exc)
    rec.final_theta = state.theta
    return rec


def run_adaptive(
    spec: AnsatzSpec,
    h: PauliSum,
    config: ScheduleConfig,
    rng: np.random.Generator,
    noise_p: float = 0.0,
    deff_every: Optional[int] = None,
    deff_thr: float = 1e-6,
) -> TrajectoryRecord:
    """Two-phase adaptive training; the record holds T + 1 entries (steps 0..T)."""
    s0 = sigma_zero(spec.n_qubits, spec.layers, config.kappa)
    theta0 = init_params(spec, s0, rng)
    return _descend(spec, h, config, rng, theta0, "adaptive", True, s0, noise_p, deff_every, deff_thr)


def run_static(
    spec: AnsatzSpec,
    h: PauliSum,
    config: ScheduleConfig,
    rng: np.random.Generator,
    noise_p: float = 0.0,
    deff_every: Optional[int] = None,
    deff_thr: float = 1e-6,
) -> TrajectoryRecord:
    """Fixed-sigma0 initialization followed by T plain Adam steps."""
    s0 = sigma_zero(spec.n_qubits, spec.layers, config.kappa)
    theta0 = init_params(spec, s0, rng)
    return _descend(spec, h, config, rng, theta0, "static", False, s0, noise_p, deff_every, deff_thr)


def run_hea(
    spec: AnsatzSpec,
    h: PauliSum,
    config: ScheduleConfig,
    rng: np.random.Generator,
    noise_p: float = 0.0,
    deff_every: Optional[int] = None,
    deff_thr: float = 1e-6,
) -> TrajectoryRecord:
    """Uniform [0, 2 pi) initialization followed by T plain Adam steps."""
    if spec.kind is not AnsatzKind.HEA:
        spec = AnsatzSpec(AnsatzKind.HEA, spec.n_qubits, spec.layers)
    theta0 = init_params(spec, 0.0, rng)
    return _descend(spec, h, config, rng, theta0, "hea", False, None, noise_p, deff_every, deff_thr)
