"""Circuit families: H-EFT-VA spin mode and the hardware-efficient baseline."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, SizeError
from .quantum import MAX_QUBITS, GateOp


class AnsatzKind(str, enum.Enum):
    HEFT_SPIN = "HEFT_SPIN"
    HEA = "HEA"


@dataclass(frozen=True)
class AnsatzSpec:
    kind: AnsatzKind
    n_qubits: int
    layers: int

    def __post_init__(self):
        object.__setattr__(self, "kind", AnsatzKind(self.kind))
        if self.layers < 1:
            raise DomainError(f"layers must be >= 1, got {self.layers}")
        if not 2 <= self.n_qubits <= MAX_QUBITS:
            raise DomainError(f"n_qubits must be in [2, {MAX_QUBITS}], got {self.n_qubits}")

    @property
    def n_params(self) -> int:
        return param_count(self)

    @cached_property
    def program(self) -> tuple:
        """Instruction list ``(kind, qubits, param_index)`` for the batched simulator.

        Parameters are laid out layer by layer: N rotation angles, then (for
        HEFT_SPIN) the N-1 entangler angles of the open chain.
        """
        n = self.n_qubits
        prog = []
        k = 0
        for _ in range(self.layers):
            for q in range(n):
                prog.append(("RY", (q,), k))
                k += 1
            for i in range(n - 1):
                if self.kind is AnsatzKind.HEFT_SPIN:
                    prog.append(("ZZ", (i, i + 1), k))
                    k += 1
                else:
                    prog.append(("CNOT", (i, i + 1), None))
        return tuple(prog)

    @property
    def n_two_qubit_gates(self) -> int:
        """CNOT count of the compiled circuit."""
        per_layer = self.n_qubits - 1
        if self.kind is AnsatzKind.HEFT_SPIN:
            per_layer *= 2
        return self.layers * per_layer


def param_count(spec: AnsatzSpec) -> int:
    if spec.kind is AnsatzKind.HEFT_SPIN:
        return spec.layers * (2 * spec.n_qubits - 1)
    return spec.layers * spec.n_qubits


def _check_theta(spec: AnsatzSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1:] != (param_count(spec),):
        raise SizeError(
            f"{spec.kind.value} N={spec.n_qubits} L={spec.layers} takes "
            f"{param_count(spec)} parameters, got shape {theta.shape}"
        )
    return theta


def build_circuit(spec: AnsatzSpec, theta) -> list[GateOp]:
    """Primitive gate list; each entangler expands to CNOT, RZ(target), CNOT."""
    theta = _check_theta(spec, theta)
    gates = []
    for kind, qubits, k in spec.program:
        if kind == "RY":
            gates.append(GateOp("RY", qubits, float(theta[k])))
        elif kind == "CNOT":
            gates.append(GateOp("CNOT", qubits))
        else:
            i, j = qubits
            gates += [
                GateOp("CNOT", (i, j)),
                GateOp("RZ", (j,), float(theta[k])),
                GateOp("CNOT", (i, j)),
            ]
    return gates


def init_params(spec: AnsatzSpec, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian(0, sigma^2) for HEFT_SPIN; uniform [0, 2 pi) for HEA (sigma ignored)."""
    p = param_count(spec)
    if spec.kind is AnsatzKind.HEA:
        return rng.uniform(0.0, 2.0 * np.pi, size=p)
    if sigma < 0:
        raise DomainError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return np.zeros(p)
    return rng.normal(0.0, sigma, size=p)


def sample_params(spec: AnsatzSpec, sampler: str, sigma: float, k: int, rng) -> np.ndarray:
    """``k`` independent parameter vectors as a (k, P) array.

    ``sampler`` is "gaussian" (scale ``sigma``, for either kind) or "uniform".
    """
    p = param_count(spec)
    if sampler == "uniform":
        return rng.uniform(0.0, 2.0 * np.pi, size=(k, p))
    if sampler == "gaussian":
        if sigma < 0:
            raise DomainError(f"sigma must be non-negative, got {sigma}")
        return rng.normal(0.0, sigma, size=(k, p)) if sigma > 0 else np.zeros((k, p))
    raise DomainError(f"unknown sampler {sampler!r}")
