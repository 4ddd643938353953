import numpy as np
import pytest

import _oracle as O
from aheft.ansatz import AnsatzKind, AnsatzSpec, build_circuit, init_params, param_count, sample_params
from aheft.errors import DomainError, SizeError
from aheft.gradients import statevector, statevectors
from aheft.quantum import apply_gates, zero_state

HEFT = AnsatzKind.HEFT_SPIN
HEA = AnsatzKind.HEA


class TestSpec:
    @pytest.mark.parametrize("n,l", [(2, 1), (4, 3), (8, 8), (14, 14)])
    def test_param_counts(self, n, l):
        assert param_count(AnsatzSpec(HEFT, n, l)) == l * (2 * n - 1)
        assert param_count(AnsatzSpec(HEA, n, l)) == l * n

    def test_two_qubit_gate_count(self):
        assert AnsatzSpec(HEFT, 5, 3).n_two_qubit_gates == 3 * 4 * 2
        assert AnsatzSpec(HEA, 5, 3).n_two_qubit_gates == 3 * 4

    @pytest.mark.parametrize("n,l", [(1, 2), (15, 1), (4, 0)])
    def test_invalid_shapes(self, n, l):
        with pytest.raises(DomainError):
            AnsatzSpec(HEFT, n, l)

    def test_kind_from_string(self):
        assert AnsatzSpec("HEA", 3, 1).kind is HEA

    def test_theta_length_checked(self):
        with pytest.raises(SizeError):
            build_circuit(AnsatzSpec(HEFT, 3, 2), np.zeros(5))


class TestCircuits:
    @pytest.mark.parametrize("n,l", [(2, 1), (3, 2), (4, 3)])
    def test_heft_matches_oracle(self, n, l):
        spec = AnsatzSpec(HEFT, n, l)
        th = np.random.default_rng(n * 10 + l).normal(size=spec.n_params)
        want = O.heft_unitary(n, l, th) @ O.zero_ket(n)
        np.testing.assert_allclose(statevector(spec, th).amplitudes, want, atol=1e-12)

    @pytest.mark.parametrize("n,l", [(2, 2), (3, 1), (4, 2)])
    def test_hea_matches_oracle(self, n, l):
        spec = AnsatzSpec(HEA, n, l)
        th = np.random.default_rng(n + l).uniform(0, 2 * np.pi, size=spec.n_params)
        want = O.hea_unitary(n, l, th) @ O.zero_ket(n)
        np.testing.assert_allclose(statevector(spec, th).amplitudes, want, atol=1e-12)

    def test_gate_list_and_batched_path_agree(self):
        spec = AnsatzSpec(HEFT, 4, 2)
        th = np.random.default_rng(0).normal(size=spec.n_params)
        via_gates = apply_gates(zero_state(4), build_circuit(spec, th)).amplitudes
        np.testing.assert_allclose(statevector(spec, th).amplitudes, via_gates, atol=1e-13)

    def test_identity_at_zero(self):
        spec = AnsatzSpec(HEFT, 5, 3)
        psi = statevector(spec, np.zeros(spec.n_params)).amplitudes
        assert abs(psi[0]) == pytest.approx(1.0, abs=1e-15)

    def test_batch_rows_independent(self):
        spec = AnsatzSpec(HEFT, 3, 2)
        th = np.random.default_rng(1).normal(size=(4, spec.n_params))
        batch = statevectors(spec, th)
        for k in range(4):
            np.testing.assert_allclose(batch[k], statevector(spec, th[k]).amplitudes, atol=1e-14)


class TestInit:
    def test_gaussian_scale(self):
        spec = AnsatzSpec(HEFT, 8, 8)
        th = sample_params(spec, "gaussian", 0.05, 400, np.random.default_rng(0))
        assert th.shape == (400, spec.n_params)
        assert np.std(th) == pytest.approx(0.05, rel=0.02)
        assert abs(np.mean(th)) < 0.001

    def test_hea_uniform_range(self):
        th = init_params(AnsatzSpec(HEA, 6, 4), 0.0, np.random.default_rng(0))
        assert th.min() >= 0 and th.max() < 2 * np.pi

    def test_sigma_zero_gives_identity_init(self):
        th = init_params(AnsatzSpec(HEFT, 3, 2), 0.0, np.random.default_rng(0))
        assert not th.any()

    def test_negative_sigma(self):
        with pytest.raises(DomainError):
            init_params(AnsatzSpec(HEFT, 3, 2), -0.1, np.random.default_rng(0))

    def test_unknown_sampler(self):
        with pytest.raises(DomainError):
            sample_params(AnsatzSpec(HEFT, 3, 2), "cauchy", 0.1, 3, np.random.default_rng(0))

    def test_deterministic_for_seed(self):
        spec = AnsatzSpec(HEFT, 4, 2)
        a = init_params(spec, 0.1, np.random.default_rng(42))
        b = init_params(spec, 0.1, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)
