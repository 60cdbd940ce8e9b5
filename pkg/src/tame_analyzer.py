"""
Graph analysis passes: definability propagation (qualitative)
and Pfaffian format propagation (quantitative), combined into a report.

Format modes:
  parameters  formats in (parameters, chain) with the input held fixed; this
              is what the pseudo-dimension bound consumes (default)
  joint       formats jointly in inputs and parameters for every node
"""

import logging
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from .arch_graph import ArchGraph, param_count, topo_order
from .bound_engine import BoundError, BoundReport, SamplePlan, plan, pnn_pdim_bound
from .format_algebra import (
    AFFINE,
    FROZEN_INPUT,
    PfaffFormat,
    TrackedFormat,
    fmt_replicate,
    tracked_bilinear,
    tracked_compose,
    tracked_sum,
)
from .gate_catalog import DefinabilityClass, GateSpec, join_classes, loss_lookup

logger = logging.getLogger(__name__)

MODES = ('parameters', 'joint')

QUALITATIVE_ONLY = 'finite, unquantified'
QUANTIFIED = 'quantified through the Pfaffian format'


class NoFormatAvailable(ValueError):
    def __init__(self, node: str, gate: str):
        super().__init__(f"Node '{node}' (gate '{gate}') has no Pfaffian format; only the qualitative verdict applies")
        self.node = node
        self.gate = gate


class AnalysisReport(BaseModel):
    structure: DefinabilityClass
    definable: bool
    finite_sample_complexity: bool
    complexity_constant: str
    mode: str = 'parameters'
    param_count: int
    net_format: Optional[PfaffFormat] = None
    per_node_formats: Dict[str, PfaffFormat] = Field(default_factory=dict)
    blocked_at: Optional[str] = None
    loss: Optional[str] = None
    bounds: Optional[BoundReport] = None
    plans: List[SamplePlan] = Field(default_factory=list)
    obligations: List[str] = Field(default_factory=list)
    caveats: List[str] = Field(default_factory=list)
    provenance: List[str] = Field(default_factory=list)


def check_definability(graph: ArchGraph) -> Tuple[DefinabilityClass, bool]:
    """Join of every gate class, plus SemiAlgebraic for the lifting and readout."""
    classes = [DefinabilityClass.SEMI_ALGEBRAIC]
    for node_id in topo_order(graph):
        node = graph.node(node_id)
        if node.gate is not None:
            classes.append(node.gate.definability)
    structure = join_classes(classes)
    return structure, structure.definable


def _node_copies(gate: GateSpec, output_dim: int) -> int:
    return output_dim if gate.elementwise else 1


def _propagate(graph: ArchGraph, mode: str) -> Dict[str, TrackedFormat]:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    tracked: Dict[str, TrackedFormat] = {}
    for node_id in topo_order(graph):
        node = graph.node(node_id)
        if node.is_input:
            # d_{0,j} = 1 at inputs
            tracked[node_id] = FROZEN_INPUT if mode == 'parameters' else TrackedFormat(AFFINE)
            continue
        gate = node.gate
        parents = [tracked[p] for p in graph.parents(node_id)]
        all_frozen = all(p.frozen for p in parents)

        # parameter-free over frozen inputs: a fixed function of x, affine (constant) in the parameters
        if mode == 'parameters' and all_frozen and gate.param_count == 0:
            tracked[node_id] = TrackedFormat(AFFINE, frozenset(), frozen=True)
        elif gate.kind == 'affine':
            if mode == 'parameters' and all_frozen:
                tracked[node_id] = TrackedFormat(AFFINE)
            else:
                tracked[node_id] = tracked_bilinear(parents)
        elif gate.kind == 'linear':
            tracked[node_id] = tracked_sum(parents)
        else:
            own = gate.split_format if (mode == 'parameters' and all_frozen) else gate.format
            if own is None:
                raise NoFormatAvailable(node_id, gate.name)
            # elementwise gates contribute one chain per output coordinate
            own = fmt_replicate(own, _node_copies(gate, node.output_dim))
            tracked[node_id] = tracked_compose(node_id, own, parents)
    return tracked


def _readout_format(graph: ArchGraph, tracked: Dict[str, TrackedFormat], mode: str) -> TrackedFormat:
    parents = [tracked[p] for p in graph.readout.parents]
    if mode == 'parameters' and all(p.frozen for p in parents):
        return TrackedFormat(AFFINE)
    return tracked_bilinear(parents)


def propagate_formats(graph: ArchGraph, mode: str = 'parameters') -> Dict[str, PfaffFormat]:
    """
    Per-node format bounds, in topological order.

    Raises:
        NoFormatAvailable: a gate without format blocks the Pfaffian route.
    """
    return {node_id: t.fmt for node_id, t in _propagate(graph, mode).items()}


def net_format(graph: ArchGraph, mode: str = 'parameters', loss: Optional[str] = None) -> PfaffFormat:
    """Format of the readout output, optionally composed with a Pfaffian loss."""
    tracked = _propagate(graph, mode)
    out = _readout_format(graph, tracked, mode)
    if loss is not None:
        out = _compose_loss(out, loss)
    return out.fmt


def _compose_loss(out: TrackedFormat, loss: str) -> TrackedFormat:
    spec = loss_lookup(loss)
    if spec.format is None:
        raise NoFormatAvailable('loss', spec.name)
    target = TrackedFormat(AFFINE, frozenset(), frozen=True)
    return tracked_compose('loss', spec.format, [out, target])


def simplified_format(L: int, q: int, D: int, d: int) -> PfaffFormat:
    """Closed form (q, (D+1) L d^{L-1}, d^L) dominating the layered recursion."""
    if L < 1 or d < 1:
        raise ValueError(f"simplified_format needs L >= 1 and d >= 1, got L={L}, d={d}")
    if q < 0 or D < 0:
        raise ValueError("q and D must be nonnegative")
    return PfaffFormat(q, (D + 1) * L * d ** (L - 1), d ** L)


def _obligations(graph: ArchGraph) -> List[str]:
    found = []
    for node in graph.compute_nodes:
        for item in node.gate.obligations:
            found.append(f"{node.node_id}: {item}")
    return found


def _caveats(graph: ArchGraph) -> List[str]:
    notes = []
    for node in graph.compute_nodes:
        if node.gate.name == 'fourier_pe':
            notes.extend(f"{node.node_id}: {n}" for n in node.gate.notes)
        if node.gate.provenance:
            notes.append(f"{node.node_id}: attention format derived with the composition lemmas")
    if graph.lifting is not None:
        notes.append("affine precomposition: formats hold on the preimage of the gate domains")
    if graph.output_dim > 1:
        notes.append("multi-output readout: bound reported for the scalar loss-composed class, "
                     "raw multi-output pseudo-dimension is ambiguous")
    return notes


def analyze(graph: ArchGraph, mode: str = 'parameters', loss: Optional[str] = None,
            epsilon: Optional[float] = None, delta: Optional[float] = None,
            C: float = 1.0, plan_mode: Optional[str] = None) -> AnalysisReport:
    """Run both passes, the bound engine and, when epsilon and delta are given, the planners."""
    structure, definable = check_definability(graph)
    P = param_count(graph)
    report = AnalysisReport(
        structure=structure, definable=definable, finite_sample_complexity=definable,
        complexity_constant=QUALITATIVE_ONLY, mode=mode, param_count=P, loss=loss,
        obligations=_obligations(graph), caveats=_caveats(graph),
    )
    if not definable:
        report.caveats.append("no o-minimal structure contains every gate; no sample-complexity guarantee")
        return report

    if loss is not None:
        loss_spec = loss_lookup(loss)
        report.structure = join_classes([report.structure, loss_spec.definability])

    try:
        tracked = _propagate(graph, mode)
        out = _readout_format(graph, tracked, mode)
        if loss is not None and loss != 'zero_one':
            out = _compose_loss(out, loss)
    except NoFormatAvailable as exc:
        logger.info("Pfaffian route blocked: %s", exc)
        report.blocked_at = exc.node
        report.caveats.append(f"qualitative-only: {exc}")
        if mode == 'joint' and exc.gate == 'fourier_pe':
            report.caveats.append(
                f"joint mode: {exc.node} is restricted analytic in the positions and has no Pfaffian format; "
                "with fixed frequencies, parameters mode freezes it into an affine input"
            )
        return report

    report.per_node_formats = {node_id: t.fmt for node_id, t in tracked.items()}
    report.net_format = out.fmt
    report.provenance = [f"{node_id}: {t.fmt}" for node_id, t in tracked.items()]
    report.provenance.append(f"readout: {out.fmt}")
    for node in graph.compute_nodes:
        report.provenance.extend(f"{node.node_id}: {step}" for step in node.gate.provenance)

    try:
        report.bounds = pnn_pdim_bound(out.fmt, max(P, 1))
        report.complexity_constant = QUANTIFIED
    except BoundError as exc:
        report.caveats.append(f"bound engine: {exc}")
        return report

    if epsilon is not None and delta is not None:
        modes = [plan_mode] if plan_mode else ['classification', 'regression']
        for m in modes:
            report.plans.append(plan(report.bounds.pdim_bound, epsilon, delta, m, C))
    return report
