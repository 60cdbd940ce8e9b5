import pytest

from src.format_algebra import AFFINE, PfaffFormat
from src.gate_catalog import (
    DC,
    GateCatalog,
    InvalidHyperparam,
    InvalidSequenceLength,
    MissingHyperparam,
    UnboundedDomain,
    UnknownGate,
    UnknownLoss,
    attention_format,
    attention_format_with_trail,
    gelu_tanh_format,
    join_classes,
    lookup,
    loss_lookup,
    softmax_format,
)


@pytest.fixture(scope='module')
def catalog():
    return GateCatalog()


class TestActivationFormats:
    """Golden formats of the smooth activations."""

    @pytest.mark.parametrize('name, expected', [
        ('sigmoid', (1, 2, 1)),
        ('tanh', (1, 2, 1)),
        ('softplus', (2, 2, 1)),
        ('gelu', (2, 2, 2)),
        ('swish', (2, 4, 2)),
        ('swiglu', (2, 4, 3)),
    ])
    def test_golden_format(self, catalog, name, expected):
        spec = catalog.lookup(name, {'width': 1})
        assert spec.format.as_tuple() == expected
        assert spec.smooth

    def test_gelu_tanh_derived(self):
        assert gelu_tanh_format() == PfaffFormat(1, 8, 4)

    def test_piecewise_gates_have_no_format(self, catalog):
        for name in ('relu', 'leaky_relu', 'hard_tanh', 'maxout'):
            spec = catalog.example(name)
            assert spec.format is None
            assert spec.definability == DC.SEMI_ALGEBRAIC

    def test_names_are_normalized(self, catalog):
        assert catalog.lookup('SiLU').name == 'swish'
        assert catalog.lookup('Leaky-ReLU').name == 'leaky_relu'
        assert 'Dense' in catalog

    def test_unknown_gate(self, catalog):
        with pytest.raises(UnknownGate):
            catalog.lookup('quantum_relu')

    def test_every_entry_instantiates(self, catalog):
        entries = catalog.get_all_entries()
        assert len(entries) == len(catalog.names())
        for spec in entries:
            if spec.format is not None:
                assert spec.definability.definable


class TestLattice:
    def test_joins(self):
        assert join_classes([DC.R_AN, DC.R_EXP]) == DC.R_AN_EXP
        assert join_classes([DC.R_EXP, DC.PFAFFIAN_CLOSURE]) == DC.PFAFFIAN_CLOSURE
        assert join_classes([DC.R_AN, DC.PFAFFIAN_CLOSURE]) == DC.TOP
        assert join_classes([DC.SEMI_ALGEBRAIC]) == DC.SEMI_ALGEBRAIC
        assert join_classes([DC.TOP, DC.NOT_DEFINABLE]) == DC.NOT_DEFINABLE

    def test_join_is_order_independent(self):
        classes = [DC.R_AN, DC.SEMI_ALGEBRAIC, DC.R_EXP]
        assert join_classes(classes) == join_classes(reversed(classes))

    def test_order(self):
        assert DC.SEMI_ALGEBRAIC < DC.R_AN < DC.R_AN_EXP < DC.TOP < DC.NOT_DEFINABLE
        assert not DC.R_AN <= DC.R_EXP
        assert not DC.NOT_DEFINABLE.definable


class TestAttentionAndSoftmax:
    def test_attention_two_tokens(self):
        assert attention_format(2, 2) == PfaffFormat(3, 4, 3)

    def test_single_token_is_the_value_projection(self):
        assert attention_format(1, 2) == AFFINE

    def test_trail_is_recorded(self):
        fmt, trail = attention_format_with_trail(3, 2)
        assert trail[-1].endswith(str(fmt))
        assert any('reciprocal' in step for step in trail)

    def test_invalid_sequence_length(self):
        with pytest.raises(InvalidSequenceLength):
            attention_format(0, 2)

    def test_softmax(self):
        assert softmax_format(1) == AFFINE
        # u = e^x1 + e^x2 is (2,1,1); g = 1/u has g' = -u' g^2, degree 1 + 2 = 3 in the chain,
        # so g is (3,3,1) and e^x1 * g lands on (3,3,2)
        assert softmax_format(2) == PfaffFormat(3, 3, 2)
        # a third exponential only lengthens the chain
        assert softmax_format(3) == PfaffFormat(4, 3, 2)

    def test_mha_parameters_and_formats(self, catalog):
        spec = catalog.lookup('mha', {'tokens': 2, 'd_model': 2, 'd_out': 2, 'heads': 1, 'd_k': 1, 'd_v': 1})
        assert spec.param_count == 12
        assert spec.split_format == PfaffFormat(6, 4, 4)
        assert spec.format.q == 2 * attention_format(2, 4, 3).q
        assert spec.provenance

    def test_mha_temperature(self, catalog):
        base = {'tokens': 2, 'd_model': 2, 'd_out': 2, 'heads': 1, 'd_k': 1, 'd_v': 1}
        plain = catalog.lookup('mha', base)
        scaled = catalog.lookup('mha', dict(base, temperature=0.5))
        assert (scaled.format, scaled.split_format) == (plain.format, plain.split_format)
        assert 'score temperature 0.5' in scaled.notes
        for bad in (0, -1.0, True, 'hot'):
            with pytest.raises(InvalidHyperparam):
                catalog.lookup('mha', dict(base, temperature=bad))


class TestStructuralEntries:
    def test_normalization_format(self, catalog):
        assert catalog.lookup('layer_norm', {'width': 4}).format == PfaffFormat(1, 4, 2)
        assert catalog.lookup('rms_norm', {'width': 4, 'tokens': 2}).format == PfaffFormat(2, 4, 2)

    def test_fourier_pe_domains(self, catalog):
        base = {'tokens': 2, 'dim': 2, 'in_dim': 4}
        assert catalog.lookup('fourier_pe', dict(base, domain='finite')).format == AFFINE
        assert catalog.lookup('fourier_pe', dict(base, domain='bounded')).definability == DC.R_AN
        assert catalog.lookup('fourier_pe', dict(base, domain='unbounded')).definability == DC.NOT_DEFINABLE

    def test_trainable_frequencies_need_bounds(self, catalog):
        with pytest.raises(UnboundedDomain):
            catalog.lookup('fourier_pe', {'tokens': 2, 'dim': 2, 'in_dim': 4, 'domain': 'bounded',
                                          'trainable_freq': True})

    def test_deq_requires_fixed_point_assertion(self, catalog):
        with pytest.raises(MissingHyperparam):
            catalog.lookup('deq', {'in_dim': 2, 'out_dim': 2})
        spec = catalog.lookup('deq', {'in_dim': 2, 'out_dim': 2, 'fixed_point_asserted': True,
                                      'f_class': 'RExp'})
        assert spec.definability == DC.R_EXP
        assert spec.obligations

    def test_residual_wraps_inner(self, catalog):
        spec = catalog.lookup('residual', {'inner': 'sigmoid', 'width': 3})
        assert spec.format == PfaffFormat(1, 2, 1)
        assert spec.output_dim == 3

    def test_declared_pfaffian_layer(self):
        spec = lookup('pfaffian', {'q': 2, 'D': 3, 'd': 2, 'params': 5})
        assert spec.format == PfaffFormat(2, 3, 2)
        assert spec.param_count == 5


class TestLosses:
    def test_exp_squashed(self):
        assert loss_lookup('exp_squashed_mse').format == PfaffFormat(1, 2, 1)

    def test_piecewise_losses(self):
        assert loss_lookup('clipped-mse').format is None

    def test_unknown_loss(self):
        with pytest.raises(UnknownLoss):
            loss_lookup('hinge')
