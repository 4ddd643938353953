import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from aheft.errors import DomainError
from aheft.stats import P_FLOOR_LOG10, cohens_d, log_betainc, t_two_sided_log10_p, welch_test

FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "welch_reference.json").read_text())


class TestFixtures:
    @pytest.mark.parametrize("case", FIXTURES, ids=[f"pair{i}" for i in range(len(FIXTURES))])
    def test_matches_reference(self, case):
        r = welch_test(case["a"], case["b"])
        assert r.t_stat == pytest.approx(case["t"], abs=1e-9)
        assert r.dof == pytest.approx(case["dof"], abs=1e-9)
        assert r.log10_p == pytest.approx(case["log10_p"], abs=1e-9)
        assert r.p_value == pytest.approx(case["p"], abs=1e-9)
        assert r.cohens_d == pytest.approx(case["cohens_d"], abs=1e-9)
        assert cohens_d(case["a"], case["b"]) == pytest.approx(case["cohens_d"], abs=1e-9)
        assert not r.p_floor_applied

    def test_fixture_count(self):
        assert len(FIXTURES) == 10


class TestWelch:
    def test_identical(self):
        r = welch_test([0, 1, 2], [0, 1, 2])
        assert r.t_stat == 0 and r.log10_p == 0 and r.p_value == 1

    def test_small_example(self):
        r = welch_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        assert r.t_stat == pytest.approx(-1.0)
        assert r.p_value == pytest.approx(0.347, abs=1e-3)

    def test_floor_engages(self):
        a = [1e-9 * (k % 3) for k in range(30)]
        b = [1.0 + 1e-9 * (k % 4) for k in range(30)]
        r = welch_test(a, b)
        assert r.p_floor_applied and r.log10_p == P_FLOOR_LOG10
        assert r.log10_p_exact < P_FLOOR_LOG10

    def test_zero_variance_branches(self):
        r = welch_test([1, 1, 1], [1, 1, 1])
        assert r.t_stat == 0 and r.log10_p == 0 and not r.p_floor_applied
        r = welch_test([0, 0], [1, 1])
        assert r.p_floor_applied and math.isinf(r.t_stat) and r.t_stat < 0
        assert json.dumps(r.to_dict())

    def test_too_few(self):
        with pytest.raises(DomainError):
            welch_test([1.0], [1.0, 2.0])

    def test_deep_tail_vs_scipy_logsf(self):
        for t, dof in [(40.0, 30.0), (200.0, 98.0), (15.0, 5.5)]:
            want = (math.log(2) + sps.t.logsf(t, dof)) / math.log(10)
            assert t_two_sided_log10_p(t, dof) == pytest.approx(want, rel=1e-10)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10_000))
    def test_random_pairs_vs_scipy(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(0, rng.uniform(0.1, 3), rng.integers(2, 40))
        b = rng.normal(rng.uniform(-2, 2), rng.uniform(0.1, 3), rng.integers(2, 40))
        ref = sps.ttest_ind(a, b, equal_var=False)
        r = welch_test(a, b)
        assert r.t_stat == pytest.approx(ref.statistic, rel=1e-12)
        assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-300)


class TestCohensD:
    def test_identical(self):
        assert cohens_d([1, 2, 3], [1, 2, 3]) == 0.0

    def test_hand_value(self):
        assert cohens_d([1, 2, 3], [3, 4, 5]) == pytest.approx(-2.0)

    def test_infinite_sentinel(self):
        assert cohens_d([0, 0], [1, 1]) == -math.inf

    def test_antisymmetric(self):
        a, b = [0.1, 0.5, 0.9, 1.3], [2.0, 2.2, 1.7]
        assert cohens_d(a, b) == pytest.approx(-cohens_d(b, a))


class TestBeta:
    @pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (4.0, 0.5, 0.9), (40.0, 0.5, 0.999), (2.5, 7.0, 0.01)])
    def test_against_scipy(self, a, b, x):
        from scipy.special import betainc

        assert math.exp(log_betainc(a, b, x)) == pytest.approx(betainc(a, b, x), rel=1e-12)

    def test_edges(self):
        assert log_betainc(2, 3, 0.0) == -math.inf
        assert log_betainc(2, 3, 1.0) == 0.0
