import math

import numpy as np
import pytest
from mpmath import mp, mpf

from src.bound_engine import (
    BadRange,
    DegenerateLog,
    InvalidFormat,
    NegativeBase,
    NonPositive,
    ceil_log2,
    component_bound_B,
    component_bound_for_rank,
    expanded_pdim_bound,
    khovanskii_count,
    km_vc_bound,
    plan,
    pnn_pdim_bound,
    sample_size_classification,
    sample_size_regression,
)
from src.format_algebra import AFFINE, CONSTANT, PfaffFormat


class TestCeilLog2:
    @pytest.mark.parametrize('x, expected', [
        (1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (2 ** 100, 100), (2 ** 100 + 1, 101),
    ])
    def test_values(self, x, expected):
        assert ceil_log2(x) == expected

    @pytest.mark.parametrize('bad', [0, -3, 1.5, True])
    def test_rejects(self, bad):
        with pytest.raises(NonPositive):
            ceil_log2(bad)


class TestKhovanskii:
    def test_polynomial_case_is_bezout(self):
        assert khovanskii_count(3, 0, 0, [2, 3, 4]) == 24

    def test_single_exponential_equation(self):
        assert khovanskii_count(1, 1, 1, [1]) == 2

    def test_degree_count_mismatch(self):
        with pytest.raises(InvalidFormat):
            khovanskii_count(2, 1, 1, [1])

    def test_negative_base(self):
        with pytest.raises(NegativeBase):
            khovanskii_count(3, 0, 0, [0, 0, 0])


class TestComponentBounds:
    def test_affine_family(self):
        assert component_bound_B(2, 0, 0, 1) == 1
        report = pnn_pdim_bound(AFFINE, 2)
        assert report.B_log2_ceil == 0
        assert report.pdim_bound == 32

    def test_khovanskii_is_optional(self):
        assert pnn_pdim_bound(PfaffFormat(1, 2, 1), 1).khovanskii_M is None
        assert pnn_pdim_bound(PfaffFormat(1, 2, 1), 1, with_khovanskii=True).khovanskii_M == 3

    def test_needs_params(self):
        with pytest.raises(InvalidFormat):
            component_bound_B(0, 1, 1, 1)

    def test_constant_function_has_one_component(self):
        assert component_bound_B(3, 0, 0, 0) == 1
        assert component_bound_B(3, 0, 5, 0) == 1
        assert component_bound_for_rank(3, 2, 0, 0, 0) == 1
        report = pnn_pdim_bound(CONSTANT, 3, with_khovanskii=True)
        assert report.B_log2_ceil == 0
        assert report.pdim_bound == 48
        assert report.khovanskii_M is None
        assert expanded_pdim_bound(3, 0, 0, 0) == 48

    def test_degree_zero_with_a_chain_is_rejected(self):
        with pytest.raises(InvalidFormat, match='q=0, d=0'):
            pnn_pdim_bound(PfaffFormat(1, 1, 0), 3)

    def test_rank_bound_dominated_by_B(self):
        for p in range(1, 5):
            for q, D, d in [(0, 0, 1), (1, 2, 1), (2, 3, 2), (3, 1, 4)]:
                B = component_bound_B(p, q, D, d)
                for r in range(p + 1):
                    assert component_bound_for_rank(p, r, q, D, d) <= B

    def test_vc_bound(self):
        assert km_vc_bound(3, 1, 1) == 48
        assert km_vc_bound(3, 4, 8) == 2 * 3 + (16 + 4) * 3

    def test_exact_route_dominates_expansion(self):
        for p in range(1, 9):
            for q in range(0, 9):
                for D in range(0, 17, 4):
                    for d in range(1, 17, 3):
                        exact = pnn_pdim_bound(PfaffFormat(q, D, d), p).pdim_bound
                        assert exact >= math.floor(expanded_pdim_bound(p, q, D, d))

    def test_bound_grows_with_the_format(self):
        small = pnn_pdim_bound(PfaffFormat(1, 2, 1), 13).pdim_bound
        large = pnn_pdim_bound(PfaffFormat(3, 2, 2), 13).pdim_bound
        assert small < large


def _independent_regression(K, epsilon, delta):
    with mp.workdps(80):
        eps = mpf(str(epsilon))
        value = (K * mp.log(K / eps) ** 2 + mp.log(1 / mpf(str(delta)))) / eps ** 2
        return int(mp.ceil(value))


class TestPlanners:
    def test_classification_reference(self):
        result = sample_size_classification(22, 0.1, 0.05)
        assert result.N == 2500
        assert result.caveats

    def test_regression_reference(self):
        result = sample_size_regression(22, 0.1, 0.05)
        assert result.N == _independent_regression(22, 0.1, 0.05)
        assert result.N == 64301

    def test_constant_scales_linearly(self):
        assert plan(22, 0.1, 0.05, 'classification', C=2.0).N == 5000

    def test_ranges(self):
        with pytest.raises(BadRange):
            plan(22, 0.0, 0.05)
        with pytest.raises(BadRange):
            plan(22, 0.1, 1.5)
        with pytest.raises(BadRange):
            plan(0, 0.1, 0.05)
        with pytest.raises(BadRange):
            plan(22, 0.1, 0.05, C=0)
        with pytest.raises(BadRange):
            plan(22, 0.1, 0.05, mode='ranking')

    def test_degenerate_logarithm(self):
        with pytest.raises(DegenerateLog):
            sample_size_regression(1, 1.0, 0.5)

    def test_monotone_sweep(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            K = int(rng.integers(2, 500))
            epsilon = float(rng.uniform(0.05, 0.9))
            delta = float(rng.uniform(0.01, 0.9))
            for mode in ('classification', 'regression'):
                base = plan(K, epsilon, delta, mode).N
                assert plan(K + 1, epsilon, delta, mode).N >= base
                assert plan(K, epsilon * 0.9, delta, mode).N >= base
                assert plan(K, epsilon, delta * 0.5, mode).N >= base
