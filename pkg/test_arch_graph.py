import json

import numpy as np
import pytest

from src.arch_graph import (
    BadConfig,
    BadWidths,
    DiagnosticKind,
    GraphBuilder,
    InvalidGraph,
    ParseError,
    TransformerConfig,
    UnboundedPE,
    build_mlp,
    build_transformer,
    emit_spec,
    param_count,
    parse_spec,
    topo_order,
    validate,
)

TINY = dict(vocab=2, d0=2, layers=1, heads=1, d_k=1, d_v=1, widths=[2], d_ff=2, d_out=1)


def mlp_closed_form(widths):
    return sum(widths[l + 1] * (widths[l] + 1) for l in range(len(widths) - 1))


def transformer_closed_form(cfg: TransformerConfig) -> int:
    total = cfg.vocab * cfg.d0
    width_in = cfg.d0
    for width, d_ff in zip(cfg.widths, cfg.ff_widths()):
        attention = cfg.heads * width_in * (2 * cfg.d_k + cfg.d_v) + cfg.heads * cfg.d_v * width + width_in * width
        feed_forward = d_ff * (width + 1) + width * (d_ff + 1)
        total += attention + feed_forward
        width_in = width
    return total + cfg.d_out * (width_in + 1)


class TestParameterCounts:
    def test_mlp_231(self):
        assert param_count(build_mlp([2, 3, 1], ['sigmoid'])) == 13

    def test_tiny_transformer(self):
        graph = build_transformer(TransformerConfig(**TINY))
        assert param_count(graph) == 31
        # W_out, b_out shared by both tokens, no pooling in front of the readout
        assert not any(n.gate.name == 'avg_pool' for n in graph.compute_nodes)
        assert graph.readout.parents == ('b1_norm2',)
        assert graph.readout.rows == 2
        assert graph.output_dim == 2

    def test_row_shared_readout_counts_once(self):
        builder = GraphBuilder(d_in=6, d_out=2)
        builder.add_input('x', 6)
        builder.set_readout(['x'], bias=True, rows=3)
        graph = builder.build()
        assert param_count(graph) == 2 * 2 + 2
        assert graph.output_dim == 6

    def test_random_mlps_match_closed_form(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            depth = int(rng.integers(2, 6))
            widths = [int(w) for w in rng.integers(1, 9, size=depth)]
            graph = build_mlp(widths, ['tanh'] * (depth - 2))
            assert param_count(graph) == mlp_closed_form(widths)

    def test_random_transformers_match_closed_form(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            layers = int(rng.integers(0, 3))
            cfg = TransformerConfig(
                vocab=int(rng.integers(1, 6)), d0=int(rng.integers(1, 5)), layers=layers,
                heads=int(rng.integers(1, 3)), d_k=int(rng.integers(1, 3)), d_v=int(rng.integers(1, 3)),
                widths=[int(w) for w in rng.integers(1, 5, size=layers)],
                d_ff=[int(w) for w in rng.integers(1, 5, size=layers)],
                d_out=int(rng.integers(1, 3)), tokens=int(rng.integers(1, 4)),
            )
            assert param_count(build_transformer(cfg)) == transformer_closed_form(cfg)

    def test_shared_slice_counted_once(self):
        builder = GraphBuilder(d_in=2, d_out=1)
        builder.add_input('x', 2)
        builder.add_gate('a', 'affine', {'in_dim': 2, 'out_dim': 2}, ['x'], param_slice='w')
        builder.add_gate('b', 'affine', {'in_dim': 2, 'out_dim': 2}, ['a'], param_slice='w')
        builder.set_readout(['b'])
        assert param_count(builder.build()) == 6 + 2

    def test_bad_widths(self):
        with pytest.raises(BadWidths):
            build_mlp([2], [])
        with pytest.raises(BadWidths):
            build_mlp([2, 3, 1], [])


class TestTransformerConfig:
    def test_layer_count_mismatch(self):
        with pytest.raises(BadConfig):
            build_transformer(TransformerConfig(**dict(TINY, widths=[2, 2])))

    def test_unbounded_trainable_pe(self):
        with pytest.raises(UnboundedPE):
            build_transformer(TransformerConfig(**dict(TINY, pe_trainable=True)))

    def test_temperature_reaches_attention(self):
        graph = build_transformer(TransformerConfig(**dict(TINY, temperature=7.0)))
        attention = graph.node('b1_mha')
        assert json.loads(attention.hyperparams_json)['temperature'] == 7.0
        assert 'score temperature 7' in attention.gate.notes

    def test_temperature_must_be_positive(self):
        with pytest.raises(BadConfig):
            build_transformer(TransformerConfig(**dict(TINY, temperature=0.0)))


class TestValidation:
    def _builder(self):
        builder = GraphBuilder(d_in=2, d_out=1)
        builder.add_input('x', 2)
        return builder

    def test_cycle_reported(self):
        builder = self._builder()
        builder.add_gate('a', 'sigmoid', {'width': 2}, ['x'])
        builder.add_gate('b', 'sigmoid', {'width': 2}, ['a'])
        builder.add_edge('b', 'a')
        builder.set_readout(['b'])
        with pytest.raises(InvalidGraph) as info:
            builder.build()
        assert DiagnosticKind.CYCLE in {d.kind for d in info.value.diagnostics}

    def test_dimension_mismatch(self):
        builder = self._builder()
        builder.add_gate('a', 'affine', {'in_dim': 3, 'out_dim': 1}, ['x'])
        builder.set_readout(['a'])
        graph = builder.build(check=False)
        kinds = [d.kind for d in validate(graph)]
        assert kinds == [DiagnosticKind.DIM_MISMATCH]

    def test_readout_parent_unknown(self):
        builder = self._builder()
        builder.set_readout(['ghost'])
        kinds = {d.kind for d in validate(builder.build(check=False))}
        assert DiagnosticKind.READOUT in kinds

    def test_readout_rows_must_divide_m_out(self):
        builder = self._builder()
        builder.set_readout(['x'], rows=3)
        diagnostics = validate(builder.build(check=False))
        assert [d.kind for d in diagnostics] == [DiagnosticKind.READOUT]
        assert 'rows=3' in diagnostics[0].message

    def test_lifting_shape(self):
        builder = self._builder()
        builder.set_readout(['x'])
        builder.set_lifting([[1, 0, 0], [0, 1, 0]])
        kinds = {d.kind for d in validate(builder.build(check=False))}
        assert DiagnosticKind.BAD_LIFTING in kinds

    def test_topological_ties_broken_by_id(self):
        builder = self._builder()
        builder.add_gate('b', 'tanh', {'width': 2}, ['x'])
        builder.add_gate('a', 'sigmoid', {'width': 2}, ['x'])
        builder.add_gate('c', 'residual_add', {'width': 2}, ['a', 'b'])
        builder.set_readout(['c'])
        assert topo_order(builder.build()) == ['x', 'a', 'b', 'c']


class TestDocuments:
    def _doc(self, **overrides):
        doc = {
            'name': 'toy', 'd_in': 2, 'd_out': 1,
            'inputs': [{'id': 'x', 'dim': 2}],
            'nodes': [
                {'id': 'h', 'gate': 'affine', 'hyperparams': {'in_dim': 2, 'out_dim': 3}},
                {'id': 'act', 'gate': 'sigmoid', 'hyperparams': {'width': 3}},
            ],
            'edges': [['x', 'h'], ['h', 'act']],
            'readout': {'parents': ['act'], 'bias': True},
        }
        doc.update(overrides)
        return doc

    def test_explicit_graph_matches_builder(self):
        graph = parse_spec(json.dumps(self._doc()))
        assert param_count(graph) == 13

    def test_unknown_gate_location(self):
        doc = self._doc()
        doc['nodes'][1]['gate'] = 'mystery'
        with pytest.raises(ParseError) as info:
            parse_spec(doc)
        assert info.value.location == 'nodes[1].gate'

    def test_unknown_edge_endpoint(self):
        with pytest.raises(ParseError) as info:
            parse_spec(self._doc(edges=[['x', 'h'], ['h', 'nowhere']]))
        assert info.value.location == 'edges[1]'

    def test_schema_violation_location(self):
        doc = self._doc()
        del doc['nodes'][0]['gate']
        with pytest.raises(ParseError) as info:
            parse_spec(doc)
        assert info.value.location == 'nodes[0].gate'

    def test_extra_fields_rejected(self):
        with pytest.raises(ParseError):
            parse_spec(self._doc(colour='blue'))

    def test_emit_then_parse_keeps_the_graph(self):
        graph = parse_spec(self._doc())
        again = parse_spec(emit_spec(graph))
        assert topo_order(again) == topo_order(graph)
        assert param_count(again) == param_count(graph)

    def test_emit_keeps_readout_rows(self):
        graph = build_transformer(TransformerConfig(**TINY))
        doc = emit_spec(graph)
        assert doc.readout.rows == 2
        assert param_count(parse_spec(doc)) == 31

    def test_shorthand_documents(self):
        assert param_count(parse_spec({'mlp': {'widths': [2, 3, 1], 'activations': ['sigmoid']}})) == 13
        assert param_count(parse_spec({'transformer': TINY})) == 31
