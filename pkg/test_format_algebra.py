import numpy as np
import pytest

from src.format_algebra import (
    AFFINE,
    CONSTANT,
    FROZEN_INPUT,
    DegenerateInnerDegree,
    FormatError,
    NegativeComponent,
    PfaffFormat,
    TrackedFormat,
    fmt_affine_precompose,
    fmt_chain_extend,
    fmt_compose,
    fmt_derivative,
    fmt_exp_of_poly,
    fmt_join,
    fmt_product,
    fmt_reciprocal,
    fmt_replicate,
    fmt_residual,
    fmt_sum,
    tracked_bilinear,
    tracked_compose,
    tracked_sum,
)

SIGMOID = PfaffFormat(1, 2, 1)


def _random_format(rng, high=6):
    return PfaffFormat(int(rng.integers(0, high)), int(rng.integers(0, high)), int(rng.integers(1, high)))


class TestPfaffFormat:
    def test_negative_component_rejected(self):
        with pytest.raises(NegativeComponent):
            PfaffFormat(0, -1, 1)

    def test_non_integer_rejected(self):
        with pytest.raises(FormatError):
            PfaffFormat(1.0, 0, 1)
        with pytest.raises(FormatError):
            PfaffFormat(True, 0, 1)

    def test_componentwise_order(self):
        assert PfaffFormat(1, 2, 1) <= PfaffFormat(1, 3, 1)
        assert not PfaffFormat(2, 0, 0) <= PfaffFormat(1, 5, 5)
        assert PfaffFormat(3, 4, 3).dominates(PfaffFormat(3, 4, 2))

    def test_text_and_tuple(self):
        assert str(PfaffFormat(3, 4, 3)) == '(3,4,3)'
        assert PfaffFormat.of([2, 4, 2]).as_tuple() == (2, 4, 2)


class TestClosureOperations:
    def test_sum_of_disjoint_and_shared_chains(self):
        assert fmt_sum(SIGMOID, SIGMOID) == PfaffFormat(2, 2, 1)
        assert fmt_sum(SIGMOID, SIGMOID, shared_chain=True) == PfaffFormat(1, 2, 1)

    def test_product_adds_degrees(self):
        assert fmt_product(SIGMOID, AFFINE) == PfaffFormat(1, 2, 2)
        assert fmt_product(PfaffFormat(2, 3, 2), PfaffFormat(1, 1, 3), shared_chain=True) == PfaffFormat(2, 3, 5)

    def test_derivative(self):
        assert fmt_derivative(SIGMOID) == PfaffFormat(1, 2, 2)
        assert fmt_derivative(CONSTANT) == CONSTANT
        assert fmt_derivative(AFFINE) == PfaffFormat(0, 0, 0)

    def test_chain_extend(self):
        assert fmt_chain_extend(SIGMOID) == PfaffFormat(2, 2, 1)
        assert fmt_chain_extend(PfaffFormat(0, 0, 3)) == PfaffFormat(1, 2, 3)

    def test_sigmoid_over_affine_keeps_format(self):
        assert fmt_compose(SIGMOID, [AFFINE]) == SIGMOID
        assert fmt_affine_precompose(SIGMOID) == SIGMOID

    def test_compose_over_sigmoid(self):
        assert fmt_compose(SIGMOID, [SIGMOID]) == PfaffFormat(2, 4, 1)

    def test_compose_with_no_inners_is_outer(self):
        assert fmt_compose(SIGMOID, []) == SIGMOID

    def test_compose_rejects_constant_inner(self):
        with pytest.raises(DegenerateInnerDegree):
            fmt_compose(SIGMOID, [AFFINE, CONSTANT])

    def test_compose_shared_chain_counts_once(self):
        inner = PfaffFormat(2, 1, 1)
        assert fmt_compose(SIGMOID, [inner, inner]).q == 5
        assert fmt_compose(SIGMOID, [inner, inner], shared_chain=True).q == 3

    def test_residual_replicate_reciprocal(self):
        assert fmt_residual(CONSTANT) == AFFINE
        assert fmt_replicate(SIGMOID, 3) == PfaffFormat(3, 2, 1)
        with pytest.raises(FormatError):
            fmt_replicate(SIGMOID, 0)
        assert fmt_reciprocal(PfaffFormat(2, 2, 1)) == PfaffFormat(3, 4, 1)

    def test_exp_of_poly(self):
        assert fmt_exp_of_poly(1) == PfaffFormat(1, 1, 1)
        assert fmt_exp_of_poly(2) == PfaffFormat(1, 2, 1)
        with pytest.raises(FormatError):
            fmt_exp_of_poly(0)

    def test_join(self):
        assert fmt_join([]) == CONSTANT
        assert fmt_join([PfaffFormat(1, 5, 1), PfaffFormat(3, 0, 2)]) == PfaffFormat(3, 5, 2)


class TestMonotonicity:
    """Every operation is monotone in each argument."""

    def test_compose_monotone_in_outer_and_inner(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            outer, inner = _random_format(rng), _random_format(rng)
            bigger_outer = PfaffFormat(outer.q + int(rng.integers(0, 2)), outer.D + int(rng.integers(0, 2)),
                                       outer.d + int(rng.integers(0, 2)))
            bigger_inner = PfaffFormat(inner.q + int(rng.integers(0, 2)), inner.D + int(rng.integers(0, 2)),
                                       inner.d + int(rng.integers(0, 2)))
            assert fmt_compose(outer, [inner]) <= fmt_compose(bigger_outer, [inner])
            assert fmt_compose(outer, [inner]) <= fmt_compose(outer, [bigger_inner])

    def test_sum_and_product_dominate_operands(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            a, b = _random_format(rng), _random_format(rng)
            for shared in (False, True):
                assert a <= fmt_sum(a, b, shared) and b <= fmt_sum(a, b, shared)
                assert a <= fmt_product(a, b, shared) and b <= fmt_product(a, b, shared)


class TestTrackedFormats:
    def test_shared_ancestor_counted_once(self):
        a = tracked_compose('a', SIGMOID, [FROZEN_INPUT])
        b = tracked_compose('b', SIGMOID, [a])
        c = tracked_compose('c', SIGMOID, [a])
        merged = tracked_sum([b, c])
        assert b.fmt == PfaffFormat(2, 4, 1)
        assert merged.chain_length == 3
        assert merged.fmt.q == 3

    def test_param_free_outer_adds_no_segment(self):
        out = tracked_compose('p', PfaffFormat(0, 0, 2), [FROZEN_INPUT])
        assert out.segments == frozenset()
        assert out.fmt == PfaffFormat(0, 0, 2)

    def test_bilinear_multiplies_by_the_weights(self):
        hidden = tracked_compose('h', PfaffFormat(3, 2, 1), [TrackedFormat(AFFINE)])
        assert tracked_bilinear([hidden]).fmt == PfaffFormat(3, 2, 2)
        assert tracked_bilinear([]).fmt == PfaffFormat(0, 0, 2)
