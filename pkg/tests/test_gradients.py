import numpy as np
import pytest

import _oracle as O
from aheft.ansatz import AnsatzKind, AnsatzSpec
from aheft.errors import DomainError, ResourceError, SizeError
from aheft.gradients import (
    density_matrices,
    energies,
    energy,
    energy_and_gradient,
    gradient_exact,
    gradient_sampled,
    sampled_energies,
)
from aheft.hamiltonians import build_tfim, build_xxz


def oracle_energy(n, l, th, hd, kind=AnsatzKind.HEFT_SPIN):
    u = (O.heft_unitary if kind is AnsatzKind.HEFT_SPIN else O.hea_unitary)(n, l, th)
    psi = u @ O.zero_ket(n)
    return float(np.vdot(psi, hd @ psi).real)


class TestEnergy:
    def test_matches_oracle(self):
        rng = np.random.default_rng(0)
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 3, 2)
        th = rng.normal(size=spec.n_params)
        assert energy(spec, th, build_xxz(3)) == pytest.approx(
            oracle_energy(3, 2, th, O.xxz_dense(3)), abs=1e-12)

    def test_noisy_energy_matches_kraus_oracle(self):
        rng = np.random.default_rng(1)
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 3, 2)
        th = rng.normal(size=spec.n_params)
        rho = O.heft_density(3, 2, th, 0.02)
        want = np.trace(rho @ O.tfim_dense(3)).real
        assert energy(spec, th, build_tfim(3), noise_p=0.02) == pytest.approx(want, abs=1e-12)
        np.testing.assert_allclose(density_matrices(spec, th, 0.02)[0], rho, atol=1e-12)

    def test_dual_path_at_zero_noise(self):
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 4, 4)
        th = np.random.default_rng(2).normal(size=(3, spec.n_params))
        h = build_tfim(4)
        np.testing.assert_allclose(energies(spec, th, h), energies(spec, th, h, 0.0, force_mixed=True),
                                   atol=1e-12)

    def test_noise_caps(self):
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 11, 1)
        with pytest.raises(ResourceError):
            energies(spec, np.zeros(spec.n_params), build_tfim(11), noise_p=1e-3)
        with pytest.raises(DomainError):
            energies(AnsatzSpec(AnsatzKind.HEFT_SPIN, 2, 1), np.zeros(3), build_tfim(2), noise_p=2.0)


class TestParameterShift:
    @pytest.mark.parametrize("kind", [AnsatzKind.HEFT_SPIN, AnsatzKind.HEA])
    def test_vs_central_difference(self, kind):
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(10):
            n, l = int(rng.integers(2, 5)), int(rng.integers(1, 4))
            spec = AnsatzSpec(kind, n, l)
            th = rng.uniform(-np.pi, np.pi, size=spec.n_params)
            h = build_tfim(n)
            fd = O.central_difference(lambda t: energy(spec, t, h), th)
            worst = max(worst, np.max(np.abs(gradient_exact(spec, th, h) - fd)))
        assert worst <= 1e-6

    def test_vs_oracle_energies(self):
        rng = np.random.default_rng(4)
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 3, 2)
        th = rng.normal(size=spec.n_params)
        hd = O.xxz_dense(3)
        fd = O.central_difference(lambda t: oracle_energy(3, 2, t, hd), th, 1e-6)
        np.testing.assert_allclose(gradient_exact(spec, th, build_xxz(3)), fd, atol=1e-7)

    def test_noisy_gradient_vs_difference(self):
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 3, 1)
        th = np.random.default_rng(5).normal(size=spec.n_params)
        h = build_tfim(3)
        fd = O.central_difference(lambda t: energy(spec, t, h, 0.01), th)
        np.testing.assert_allclose(gradient_exact(spec, th, h, 0.01), fd, atol=1e-6)

    def test_energy_returned_with_gradient(self):
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 3, 2)
        th = np.random.default_rng(6).normal(size=spec.n_params)
        e, _ = energy_and_gradient(spec, th, build_tfim(3))
        assert e == pytest.approx(energy(spec, th, build_tfim(3)), abs=1e-14)

    def test_reference_state_gradient(self):
        # at theta = 0 each RY angle picks up -1 from its -X_q field term; ZZ angles see nothing
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 4, 1)
        g = gradient_exact(spec, np.zeros(spec.n_params), build_tfim(4))
        np.testing.assert_allclose(g[:4], -1.0, atol=1e-14)
        np.testing.assert_allclose(g[4:], 0.0, atol=1e-14)

    def test_wrong_length(self):
        with pytest.raises(SizeError):
            gradient_exact(AnsatzSpec(AnsatzKind.HEA, 3, 1), np.zeros(4), build_tfim(3))


class TestShots:
    def test_unbiased(self):
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 3, 1)
        th = np.random.default_rng(7).normal(size=spec.n_params)
        h = build_tfim(3)
        rngs = np.random.default_rng(8).spawn(4000)
        est = sampled_energies(spec, np.tile(th, (4000, 1)), h, 50, rngs)
        exact = energy(spec, th, h)
        assert abs(est.mean() - exact) < 4 * est.std() / np.sqrt(4000)

    def test_variance_scales_inverse_shots(self):
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 3, 1)
        th = np.random.default_rng(9).normal(size=spec.n_params)
        h = build_tfim(3)
        v = []
        for m in (100, 10000):
            est = sampled_energies(spec, np.tile(th, (2000, 1)), h, m, np.random.default_rng(m).spawn(2000))
            v.append(est.var())
        assert v[0] / v[1] == pytest.approx(100, rel=0.15)

    def test_sampled_gradient_reproducible(self):
        spec = AnsatzSpec(AnsatzKind.HEFT_SPIN, 3, 1)
        th = np.zeros(spec.n_params)
        a = gradient_sampled(spec, th, build_tfim(3), 100, np.random.default_rng(1))
        b = gradient_sampled(spec, th, build_tfim(3), 100, np.random.default_rng(1))
        np.testing.assert_array_equal(a, b)

    def test_shots_domain(self):
        with pytest.raises(DomainError):
            gradient_sampled(AnsatzSpec(AnsatzKind.HEA, 2, 1), np.zeros(2), build_tfim(2), 0,
                             np.random.default_rng(0))
