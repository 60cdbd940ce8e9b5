"""
Network intermediate representation: a DAG of gate instances fed through a
binary lifting matrix and read out by a trainable affine map.
"""

import heapq
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from .gate_catalog import CatalogError, GateCatalog, GateSpec, UnboundedDomain, default_catalog
from .spec_documents import (
    ArchSpecDoc,
    InputDoc,
    NodeDoc,
    ReadoutDoc,
    TransformerDoc,
    error_location,
)

logger = logging.getLogger(__name__)


class GraphError(ValueError):
    pass


class CycleDetected(GraphError):
    pass


class BadWidths(GraphError):
    pass


class BadConfig(GraphError):
    pass


class UnboundedPE(GraphError):
    pass


class ParseError(GraphError):
    def __init__(self, message: str, location: str = '<document>'):
        super().__init__(f"{location}: {message}")
        self.location = location
        self.detail = message


class InvalidGraph(GraphError):
    def __init__(self, diagnostics: List['Diagnostic']):
        self.diagnostics = diagnostics
        summary = '; '.join(str(d) for d in diagnostics[:5])
        super().__init__(f"{len(diagnostics)} validation diagnostic(s): {summary}")


class DiagnosticKind(str, Enum):
    CYCLE = 'CycleDetected'
    DIM_MISMATCH = 'DimMismatch'
    DUPLICATE_NODE = 'DuplicateNode'
    UNKNOWN_NODE = 'UnknownNode'
    INPUT_HAS_PARENTS = 'InputHasParents'
    MISSING_PARENTS = 'MissingParents'
    BAD_LIFTING = 'BadLifting'
    READOUT = 'ReadoutMismatch'
    SLICE_MISMATCH = 'SliceMismatch'


@dataclass(frozen=True)
class Diagnostic:
    kind: DiagnosticKind
    node: Optional[str]
    message: str
    severity: str = 'error'

    def __str__(self) -> str:
        where = f" at {self.node}" if self.node else ''
        return f"[{self.kind.value}{where}] {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'node': self.node, 'message': self.message, 'severity': self.severity}


@dataclass(frozen=True)
class Node:
    node_id: str
    output_dim: int
    gate: Optional[GateSpec] = None
    param_slice: Optional[str] = None
    # canonical JSON of the hyperparameters, kept for emit_spec
    hyperparams_json: str = '{}'

    @property
    def is_input(self) -> bool:
        return self.gate is None

    @property
    def param_count(self) -> int:
        return self.gate.param_count if self.gate else 0


@dataclass(frozen=True)
class Readout:
    parents: Tuple[str, ...]
    d_out: int
    bias: bool = False
    # rows > 1: the same W_out, b_out applied to each of `rows` equal slices
    rows: int = 1


@dataclass(frozen=True)
class ArchGraph:
    d_in: int
    nodes: Tuple[Node, ...]
    edges: Tuple[Tuple[str, str], ...]
    readout: Readout
    lifting: Optional[Tuple[Tuple[int, ...], ...]] = None
    name: Optional[str] = None
    _index: Dict[str, Node] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        # first occurrence wins; duplicates are reported by validate()
        for node in self.nodes:
            self._index.setdefault(node.node_id, node)

    @property
    def d_out(self) -> int:
        return self.readout.d_out

    @property
    def output_dim(self) -> int:
        return self.readout.rows * self.readout.d_out

    def node(self, node_id: str) -> Node:
        return self._index[node_id]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._index

    def parents(self, node_id: str) -> List[str]:
        return [src for src, dst in self.edges if dst == node_id]

    def children(self, node_id: str) -> List[str]:
        return [dst for src, dst in self.edges if src == node_id]

    @property
    def input_nodes(self) -> List[Node]:
        return [n for n in self.nodes if n.is_input]

    @property
    def compute_nodes(self) -> List[Node]:
        return [n for n in self.nodes if not n.is_input]

    @property
    def m_out(self) -> int:
        return sum(self.node(p).output_dim for p in self.readout.parents if self.has_node(p))


class GraphBuilder:
    """Incremental construction of an ArchGraph; validation happens at build time."""

    def __init__(self, d_in: int, d_out: int, name: Optional[str] = None,
                 catalog: Optional[GateCatalog] = None):
        self.d_in = d_in
        self.d_out = d_out
        self.name = name
        self.catalog = catalog or default_catalog()
        self._nodes: List[Node] = []
        self._edges: List[Tuple[str, str]] = []
        self._readout: Optional[Readout] = None
        self._lifting = None

    def add_input(self, node_id: str, dim: int) -> str:
        self._nodes.append(Node(node_id=node_id, output_dim=dim))
        return node_id

    def add_gate(self, node_id: str, gate: str, hyperparams: Optional[Dict[str, Any]] = None,
                 parents: Sequence[str] = (), param_slice: Optional[str] = None) -> str:
        hp = dict(hyperparams or {})
        spec = self.catalog.lookup(gate, hp)
        self._nodes.append(Node(
            node_id=node_id, output_dim=spec.output_dim, gate=spec, param_slice=param_slice,
            hyperparams_json=json.dumps(hp, sort_keys=True),
        ))
        for parent in parents:
            self._edges.append((parent, node_id))
        return node_id

    def add_edge(self, src: str, dst: str):
        self._edges.append((src, dst))

    def set_readout(self, parents: Sequence[str], bias: bool = False, rows: int = 1):
        self._readout = Readout(parents=tuple(parents), d_out=self.d_out, bias=bias, rows=rows)

    def set_lifting(self, matrix: Optional[Sequence[Sequence[int]]]):
        self._lifting = None if matrix is None else tuple(tuple(row) for row in matrix)

    def build(self, check: bool = True) -> ArchGraph:
        if self._readout is None:
            raise GraphError("Graph has no readout")
        graph = ArchGraph(
            d_in=self.d_in, nodes=tuple(self._nodes), edges=tuple(self._edges),
            readout=self._readout, lifting=self._lifting, name=self.name,
        )
        if check:
            diagnostics = validate(graph)
            if diagnostics:
                raise InvalidGraph(diagnostics)
        return graph


# Validation

def _find_cycle_node(graph: ArchGraph) -> Optional[str]:
    try:
        topo_order(graph)
    except CycleDetected as exc:
        return getattr(exc, 'node', None) or '?'
    return None


def validate(graph: ArchGraph) -> List[Diagnostic]:
    """Check every structural invariant; an empty list means the graph is valid."""
    diagnostics: List[Diagnostic] = []
    seen = set()
    for node in graph.nodes:
        if node.node_id in seen:
            diagnostics.append(Diagnostic(DiagnosticKind.DUPLICATE_NODE, node.node_id,
                                          f"Node id '{node.node_id}' is declared twice"))
        seen.add(node.node_id)

    known_edges = []
    for src, dst in graph.edges:
        missing = [n for n in (src, dst) if not graph.has_node(n)]
        if missing:
            diagnostics.append(Diagnostic(DiagnosticKind.UNKNOWN_NODE, missing[0],
                                          f"Edge {src} -> {dst} references an unknown node"))
        else:
            known_edges.append((src, dst))

    for node in graph.nodes:
        parents = [s for s, d in known_edges if d == node.node_id]
        if node.is_input:
            if parents:
                diagnostics.append(Diagnostic(DiagnosticKind.INPUT_HAS_PARENTS, node.node_id,
                                              "Input nodes receive only the lifted input"))
            continue
        if not parents:
            diagnostics.append(Diagnostic(DiagnosticKind.MISSING_PARENTS, node.node_id,
                                          "Computation node has no parents"))
            continue
        fan_in = sum(graph.node(p).output_dim for p in parents)
        if fan_in != node.gate.input_dim:
            diagnostics.append(Diagnostic(
                DiagnosticKind.DIM_MISMATCH, node.node_id,
                f"Gate '{node.gate.name}' expects input dim {node.gate.input_dim}, parents provide {fan_in}",
            ))

    if not any(d.kind == DiagnosticKind.UNKNOWN_NODE for d in diagnostics):
        cycle_node = _find_cycle_node(graph)
        if cycle_node is not None:
            diagnostics.append(Diagnostic(DiagnosticKind.CYCLE, cycle_node,
                                          "Graph contains a directed cycle"))

    diagnostics.extend(_check_lifting(graph))
    diagnostics.extend(_check_readout(graph))
    diagnostics.extend(_check_slices(graph))
    return diagnostics


def _check_lifting(graph: ArchGraph) -> List[Diagnostic]:
    rows = sum(n.output_dim for n in graph.input_nodes)
    if not graph.input_nodes:
        return [Diagnostic(DiagnosticKind.BAD_LIFTING, None, "Graph has no input nodes")]
    if graph.lifting is None:
        if rows != graph.d_in:
            return [Diagnostic(DiagnosticKind.BAD_LIFTING, None,
                               f"Identity lifting needs input dims summing to d_in={graph.d_in}, got {rows}")]
        return []
    problems = []
    if len(graph.lifting) != rows or any(len(r) != graph.d_in for r in graph.lifting):
        problems.append(Diagnostic(DiagnosticKind.BAD_LIFTING, None,
                                   f"Lifting matrix must be {rows} x {graph.d_in}"))
    if any(v not in (0, 1) for r in graph.lifting for v in r):
        problems.append(Diagnostic(DiagnosticKind.BAD_LIFTING, None, "Lifting entries must be 0 or 1"))
    return problems


def _check_readout(graph: ArchGraph) -> List[Diagnostic]:
    problems = []
    if not graph.readout.parents:
        problems.append(Diagnostic(DiagnosticKind.READOUT, None, "Readout has no parents"))
    for parent in graph.readout.parents:
        if not graph.has_node(parent):
            problems.append(Diagnostic(DiagnosticKind.READOUT, parent, "Readout parent is unknown"))
    if graph.readout.d_out < 1:
        problems.append(Diagnostic(DiagnosticKind.READOUT, None, "d_out must be >= 1"))
    rows = graph.readout.rows
    if rows < 1:
        problems.append(Diagnostic(DiagnosticKind.READOUT, None, f"readout rows must be >= 1, got {rows}"))
    elif not problems and graph.m_out % rows:
        problems.append(Diagnostic(DiagnosticKind.READOUT, None,
                                   f"readout rows={rows} must divide M_out={graph.m_out}"))
    return problems


def _check_slices(graph: ArchGraph) -> List[Diagnostic]:
    sizes: Dict[str, Tuple[str, int]] = {}
    problems = []
    for node in graph.compute_nodes:
        if node.param_slice is None:
            continue
        if node.param_slice in sizes and sizes[node.param_slice][1] != node.param_count:
            first, size = sizes[node.param_slice]
            problems.append(Diagnostic(
                DiagnosticKind.SLICE_MISMATCH, node.node_id,
                f"Slice '{node.param_slice}' has {size} parameters at {first} but {node.param_count} here",
            ))
        sizes.setdefault(node.param_slice, (node.node_id, node.param_count))
    return problems


def topo_order(graph: ArchGraph) -> List[str]:
    """Parents before children; ties broken by node id."""
    indegree = {n.node_id: 0 for n in graph.nodes}
    for _, dst in graph.edges:
        indegree[dst] += 1
    ready = [node_id for node_id, deg in indegree.items() if deg == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        current = heapq.heappop(ready)
        order.append(current)
        for child in graph.children(current):
            indegree[child] -= 1
            if indegree[child] == 0:
                heapq.heappush(ready, child)
    if len(order) != len(indegree):
        stuck = sorted(n for n, deg in indegree.items() if deg > 0)
        error = CycleDetected(f"Cycle through {', '.join(stuck)}")
        error.node = stuck[0]
        raise error
    return order


def param_count(graph: ArchGraph) -> int:
    """P = d_out * M_out / rows (+ d_out bias) + sum of node slices, shared slices counted once."""
    total = graph.d_out * (graph.m_out // graph.readout.rows) + (graph.d_out if graph.readout.bias else 0)
    counted = set()
    for node in graph.compute_nodes:
        if node.param_slice is not None:
            if node.param_slice in counted:
                continue
            counted.add(node.param_slice)
        total += node.param_count
    return total


# Builders

def build_mlp(widths: Sequence[int], activations: Sequence[str],
              catalog: Optional[GateCatalog] = None) -> ArchGraph:
    """Line graph affine -> activation per hidden layer, closed by a biased readout."""
    widths = list(widths)
    activations = list(activations)
    if len(widths) < 2:
        raise BadWidths(f"An MLP needs at least input and output widths, got {widths}")
    if any(isinstance(w, bool) or not isinstance(w, int) or w < 1 for w in widths):
        raise BadWidths(f"Widths must be positive integers, got {widths}")
    if len(activations) != len(widths) - 2:
        raise BadWidths(f"{len(widths)} widths need {len(widths) - 2} activations, got {len(activations)}")

    builder = GraphBuilder(d_in=widths[0], d_out=widths[-1], name='mlp', catalog=catalog)
    previous = builder.add_input('x', widths[0])
    for layer, activation in enumerate(activations, start=1):
        affine = builder.add_gate(f'l{layer}_affine', 'affine',
                                  {'in_dim': widths[layer - 1], 'out_dim': widths[layer]}, [previous])
        previous = builder.add_gate(f'l{layer}_act', activation, {'width': widths[layer]}, [affine])
    builder.set_readout([previous], bias=True)
    return builder.build()


@dataclass
class TransformerConfig:
    vocab: int
    d0: int
    layers: int
    heads: int
    d_k: int
    d_v: int
    widths: List[int]
    d_ff: Union[int, List[int]]
    d_out: int
    tokens: int = 2
    activation: str = 'gelu_tanh'
    norm: str = 'layer_norm'
    eps: float = 1e-5
    temperature: float = 1.0
    pe_domain: str = 'bounded'
    pe_trainable: bool = False
    pe_freq_bounded: bool = False

    @classmethod
    def from_doc(cls, doc: TransformerDoc) -> 'TransformerConfig':
        return cls(**doc.model_dump())

    def ff_widths(self) -> List[int]:
        if isinstance(self.d_ff, list):
            return list(self.d_ff)
        return [self.d_ff] * self.layers

    def validate(self):
        dims = {'vocab': self.vocab, 'd0': self.d0, 'heads': self.heads, 'd_k': self.d_k,
                'd_v': self.d_v, 'd_out': self.d_out, 'tokens': self.tokens}
        for name, value in dims.items():
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise BadConfig(f"{name} must be a positive integer, got {value!r}")
        if self.layers < 0:
            raise BadConfig(f"layers must be >= 0, got {self.layers}")
        if len(self.widths) != self.layers:
            raise BadConfig(f"{self.layers} layers need {self.layers} widths, got {len(self.widths)}")
        if len(self.ff_widths()) != self.layers:
            raise BadConfig("d_ff must give one width per layer")
        if any(w < 1 for w in self.widths + self.ff_widths()):
            raise BadConfig("all widths must be >= 1")
        if self.eps <= 0 or self.temperature <= 0:
            raise BadConfig("normalization eps and attention temperature must be positive")
        if self.pe_trainable and (self.pe_domain == 'unbounded' or not self.pe_freq_bounded):
            raise UnboundedPE("Trainable positional frequencies need a bounded parameter domain")


def build_transformer(cfg: TransformerConfig, catalog: Optional[GateCatalog] = None) -> ArchGraph:
    """Embedding + positional encoding, L blocks, a biased readout shared by every token."""
    cfg.validate()
    T = cfg.tokens
    builder = GraphBuilder(d_in=T * cfg.vocab, d_out=cfg.d_out, name='transformer', catalog=catalog)
    tokens = builder.add_input('tokens', T * cfg.vocab)
    embed = builder.add_gate('embedding', 'embedding', {'vocab': cfg.vocab, 'dim': cfg.d0, 'tokens': T}, [tokens])
    try:
        pe = builder.add_gate('pos_enc', 'fourier_pe', {
            'tokens': T, 'dim': cfg.d0, 'in_dim': T * cfg.vocab, 'domain': cfg.pe_domain,
            'trainable_freq': cfg.pe_trainable, 'freq_bounded': cfg.pe_freq_bounded,
        }, [tokens])
    except UnboundedDomain as exc:
        raise UnboundedPE(str(exc)) from exc
    previous = builder.add_gate('embed_add', 'residual_add', {'width': T * cfg.d0}, [embed, pe])

    width_in = cfg.d0
    for layer, (width, d_ff) in enumerate(zip(cfg.widths, cfg.ff_widths()), start=1):
        b = f'b{layer}'
        attn = builder.add_gate(f'{b}_mha', 'mha', {
            'tokens': T, 'd_model': width_in, 'd_out': width, 'heads': cfg.heads,
            'd_k': cfg.d_k, 'd_v': cfg.d_v, 'temperature': cfg.temperature,
        }, [previous])
        norm1 = builder.add_gate(f'{b}_norm1', cfg.norm, {'width': width, 'tokens': T, 'eps': cfg.eps}, [attn])
        ff1 = builder.add_gate(f'{b}_ff1', 'affine', {'in_dim': T * width, 'out_dim': T * d_ff, 'rows': T}, [norm1])
        act = builder.add_gate(f'{b}_act', cfg.activation, {'width': T * d_ff}, [ff1])
        ff2 = builder.add_gate(f'{b}_ff2', 'affine', {'in_dim': T * d_ff, 'out_dim': T * width, 'rows': T}, [act])
        res = builder.add_gate(f'{b}_res', 'residual_add', {'width': T * width}, [norm1, ff2])
        previous = builder.add_gate(f'{b}_norm2', cfg.norm, {'width': width, 'tokens': T, 'eps': cfg.eps}, [res])
        width_in = width

    builder.set_readout([previous], bias=True, rows=T)
    return builder.build()


# Documents

def parse_spec(doc: Union[ArchSpecDoc, Dict[str, Any], str, bytes],
               catalog: Optional[GateCatalog] = None) -> ArchGraph:
    """
    Turn an architecture document into a validated graph.

    Raises:
        ParseError: malformed document, unknown gate or bad hyperparameters (with location).
        InvalidGraph: the document parses but violates a graph invariant.
    """
    if not isinstance(doc, ArchSpecDoc):
        try:
            if isinstance(doc, (str, bytes)):
                doc = ArchSpecDoc.model_validate_json(doc)
            else:
                doc = ArchSpecDoc.model_validate(doc)
        except ValidationError as exc:
            location, message = error_location(exc)
            raise ParseError(message, location) from exc

    if doc.mlp is not None:
        try:
            return build_mlp(doc.mlp.widths, doc.mlp.activations, catalog)
        except CatalogError as exc:
            raise ParseError(str(exc), 'mlp.activations') from exc
    if doc.transformer is not None:
        try:
            return build_transformer(TransformerConfig.from_doc(doc.transformer), catalog)
        except CatalogError as exc:
            raise ParseError(str(exc), 'transformer') from exc

    builder = GraphBuilder(d_in=doc.d_in, d_out=doc.d_out, name=doc.name, catalog=catalog)
    for item in doc.inputs:
        builder.add_input(item.id, item.dim)
    declared = {i.id for i in doc.inputs} | {n.id for n in doc.nodes}
    for index, (src, dst) in enumerate(doc.edges):
        for endpoint in (src, dst):
            if endpoint not in declared:
                raise ParseError(f"unknown node '{endpoint}'", f'edges[{index}]')
    for index, node in enumerate(doc.nodes):
        if node.gate not in builder.catalog:
            raise ParseError(f"unknown gate '{node.gate}'", f'nodes[{index}].gate')
        try:
            builder.add_gate(node.id, node.gate, node.hyperparams, param_slice=node.param_slice)
        except CatalogError as exc:
            raise ParseError(str(exc), f'nodes[{index}].hyperparams') from exc
    for src, dst in doc.edges:
        builder.add_edge(src, dst)
    for index, parent in enumerate(doc.readout.parents):
        if parent not in declared:
            raise ParseError(f"unknown node '{parent}'", f'readout.parents[{index}]')
    builder.set_readout(doc.readout.parents, bias=doc.readout.bias, rows=doc.readout.rows)
    builder.set_lifting(doc.lifting)
    graph = builder.build()
    logger.info("Parsed graph %s: %d nodes, %d edges", graph.name, len(graph.nodes), len(graph.edges))
    return graph


def emit_spec(graph: ArchGraph) -> ArchSpecDoc:
    """Inverse of parse_spec for explicit graphs."""
    return ArchSpecDoc(
        name=graph.name,
        d_in=graph.d_in,
        d_out=graph.d_out,
        inputs=[InputDoc(id=n.node_id, dim=n.output_dim) for n in graph.input_nodes],
        nodes=[
            NodeDoc(id=n.node_id, gate=n.gate.name, hyperparams=json.loads(n.hyperparams_json),
                    param_slice=n.param_slice)
            for n in graph.compute_nodes
        ],
        edges=[tuple(edge) for edge in graph.edges],
        lifting=None if graph.lifting is None else [list(row) for row in graph.lifting],
        readout=ReadoutDoc(parents=list(graph.readout.parents), bias=graph.readout.bias,
                           rows=graph.readout.rows),
    )
