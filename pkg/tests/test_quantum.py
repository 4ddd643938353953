import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import _oracle as O
from aheft.errors import DomainError, QubitIndexError, SizeError
from aheft.quantum import (
    GateOp,
    MixedState,
    PureState,
    apply_depolarizing_pair,
    apply_gate,
    apply_gate_mixed,
    apply_gates,
    apply_zz_entangler,
    basis_state,
    fidelity,
    overlap,
    purity,
    reduced_density,
    to_density,
    vn_entropy,
    zero_state,
)


def random_state(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return PureState(n, v / np.linalg.norm(v))


class TestStates:
    def test_zero_state(self):
        s = zero_state(3)
        assert s.amplitudes[0] == 1 and np.count_nonzero(s.amplitudes) == 1

    @pytest.mark.parametrize("n", [0, 15, -1])
    def test_zero_state_size_bounds(self, n):
        with pytest.raises(SizeError):
            zero_state(n)

    def test_basis_state_msb_is_qubit_zero(self):
        s = basis_state("100")
        assert s.amplitudes[4] == 1

    def test_amplitude_shape_checked(self):
        with pytest.raises(SizeError):
            PureState(2, np.ones(3))


class TestGates:
    def test_ry_pi_flips_exactly(self):
        s = apply_gate(zero_state(1), GateOp("RY", (0,), np.pi))
        assert abs(s.amplitudes[1]) == pytest.approx(1.0, abs=0)
        assert abs(s.amplitudes[0]) < 1e-16

    @pytest.mark.parametrize("kind,mat", [("RY", O.ry), ("RZ", O.rz)])
    def test_single_qubit_gates_match_matrices(self, kind, mat):
        rng = np.random.default_rng(1)
        for _ in range(10):
            n = int(rng.integers(1, 5))
            q = int(rng.integers(n))
            a = float(rng.uniform(-7, 7))
            s = random_state(n, rng)
            want = O.embed(mat(a), q, n) @ s.amplitudes
            got = apply_gate(s, GateOp(kind, (q,), a)).amplitudes
            np.testing.assert_allclose(got, want, atol=1e-13)

    def test_cnot_matches_matrix(self):
        rng = np.random.default_rng(2)
        for c, t in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 3)]:
            s = random_state(4, rng)
            got = apply_gate(s, GateOp("CNOT", (c, t))).amplitudes
            np.testing.assert_allclose(got, O.cnot(c, t, 4) @ s.amplitudes, atol=1e-14)

    def test_entangler_is_zz_rotation(self):
        rng = np.random.default_rng(3)
        worst = 1.0
        for _ in range(200):
            n = int(rng.integers(2, 5))
            i, j = rng.choice(n, 2, replace=False)
            phi = float(rng.uniform(-2 * np.pi, 2 * np.pi))
            s = random_state(n, rng)
            got = apply_zz_entangler(s, int(i), int(j), phi)
            want = PureState(n, O.zz_exp(i, j, phi, n) @ s.amplitudes)
            worst = min(worst, fidelity(got, want))
        assert worst >= 1 - 1e-12

    def test_bad_qubit_index(self):
        with pytest.raises(QubitIndexError):
            apply_gate(zero_state(2), GateOp("RY", (2,), 0.1))
        with pytest.raises(QubitIndexError):
            GateOp("CNOT", (1, 1))
        with pytest.raises(QubitIndexError):
            apply_zz_entangler(zero_state(2), 0, 0, 0.3)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            GateOp("H", (0,))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from(["RY", "RZ", "CNOT"]), st.integers(0, 2),
                              st.integers(0, 2), st.floats(-10, 10)), max_size=12))
    def test_gates_preserve_norm(self, ops):
        gates = []
        for kind, a, b, ang in ops:
            if kind == "CNOT":
                if a == b:
                    continue
                gates.append(GateOp(kind, (a, b)))
            else:
                gates.append(GateOp(kind, (a,), ang))
        s = apply_gates(basis_state("010"), gates)
        assert s.norm2() == pytest.approx(1.0, abs=1e-12)


class TestMixed:
    def test_unitary_path_matches_pure(self):
        rng = np.random.default_rng(4)
        s = random_state(3, rng)
        rho = to_density(s)
        for g in [GateOp("RY", (1,), 0.7), GateOp("CNOT", (0, 2)), GateOp("RZ", (2,), -1.1)]:
            s = apply_gate(s, g)
            rho = apply_gate_mixed(rho, g, 0.0)
        np.testing.assert_allclose(rho.matrix, to_density(s).matrix, atol=1e-13)

    def test_depolarizing_matches_pauli_twirl(self):
        rng = np.random.default_rng(5)
        rho = to_density(random_state(3, rng))
        for i, j, p in [(0, 1, 0.1), (2, 0, 0.37), (1, 2, 1.0)]:
            got = apply_depolarizing_pair(rho, i, j, p).matrix
            np.testing.assert_allclose(got, O.depolarize_pair_kraus(rho.matrix, i, j, 3, p), atol=1e-13)

    def test_cnot_followed_by_noise(self):
        rho = to_density(random_state(2, np.random.default_rng(6)))
        got = apply_gate_mixed(rho, GateOp("CNOT", (0, 1)), 0.05).matrix
        c = O.cnot(0, 1, 2)
        want = O.depolarize_pair_kraus(c @ rho.matrix @ c.conj().T, 0, 1, 2, 0.05)
        np.testing.assert_allclose(got, want, atol=1e-13)

    def test_trace_and_hermiticity_preserved(self):
        rho = to_density(random_state(3, np.random.default_rng(7)))
        out = apply_depolarizing_pair(rho, 0, 2, 0.3).matrix
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-13)
        np.testing.assert_allclose(out, out.conj().T, atol=1e-14)
        assert purity(MixedState(3, out)) < 1.0

    @pytest.mark.parametrize("p", [-0.1, 1.5])
    def test_probability_domain(self, p):
        with pytest.raises(DomainError):
            apply_depolarizing_pair(to_density(zero_state(2)), 0, 1, p)


class TestEntropy:
    def test_bell_pair_one_bit(self):
        bell = PureState(2, np.array([1, 0, 0, 1]) / np.sqrt(2))
        assert vn_entropy(reduced_density(bell, [0])) == pytest.approx(1.0, abs=1e-12)

    def test_product_state_zero(self):
        s = apply_gate(zero_state(3), GateOp("RY", (1,), 0.4))
        assert vn_entropy(reduced_density(s, [0])) == pytest.approx(0.0, abs=1e-12)

    def test_reduced_density_oracle(self):
        s = random_state(3, np.random.default_rng(8))
        psi = s.amplitudes.reshape(2, 4)
        np.testing.assert_allclose(reduced_density(s, [0]).matrix, psi @ psi.conj().T, atol=1e-14)

    def test_empty_keep(self):
        with pytest.raises(DomainError):
            reduced_density(zero_state(2), [])

    def test_complement_entropies_equal(self):
        s = random_state(4, np.random.default_rng(9))
        a = vn_entropy(reduced_density(s, [0, 1]))
        b = vn_entropy(reduced_density(s, [2, 3]))
        assert a == pytest.approx(b, abs=1e-10)


class TestOverlap:
    def test_fidelity_is_phase_blind(self):
        s = random_state(2, np.random.default_rng(10))
        t = PureState(2, np.exp(0.7j) * s.amplitudes)
        assert fidelity(s, t) == pytest.approx(1.0, abs=1e-14)
        assert abs(overlap(s, t)) == pytest.approx(1.0, abs=1e-14)

    def test_size_mismatch(self):
        with pytest.raises(SizeError):
            overlap(zero_state(2), zero_state(3))
