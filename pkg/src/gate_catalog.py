"""
Gate catalog: every building block a feedforward network may use,
with its definability class and, for smooth Pfaffian gates, its format.

Each gate carries two formats:
  format        jointly in the gate inputs and its parameters
  split_format  in one argument block with the other held fixed
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from .format_algebra import (
    AFFINE,
    CONSTANT,
    PfaffFormat,
    fmt_compose,
    fmt_exp_of_poly,
    fmt_product,
    fmt_reciprocal,
    fmt_replicate,
    fmt_residual,
    fmt_sum,
)

logger = logging.getLogger(__name__)


class CatalogError(ValueError):
    pass


class UnknownGate(CatalogError):
    pass


class MissingHyperparam(CatalogError):
    pass


class InvalidHyperparam(CatalogError):
    pass


class UnboundedDomain(CatalogError):
    pass


class UnknownLoss(CatalogError):
    pass


class InvalidSequenceLength(CatalogError):
    pass


class DefinabilityClass(str, Enum):
    SEMI_ALGEBRAIC = 'SemiAlgebraic'
    R_AN = 'RAn'
    R_EXP = 'RExp'
    R_AN_EXP = 'RAnExp'
    PFAFFIAN_CLOSURE = 'PfaffianClosure'
    TOP = 'Top'
    NOT_DEFINABLE = 'NotDefinable'

    @property
    def definable(self) -> bool:
        return self is not DefinabilityClass.NOT_DEFINABLE

    def __le__(self, other):
        if not isinstance(other, DefinabilityClass):
            return NotImplemented
        return other in _UP_SETS[self]

    def __lt__(self, other):
        if not isinstance(other, DefinabilityClass):
            return NotImplemented
        return self != other and self <= other

    def __ge__(self, other):
        if not isinstance(other, DefinabilityClass):
            return NotImplemented
        return other <= self

    def __gt__(self, other):
        if not isinstance(other, DefinabilityClass):
            return NotImplemented
        return other < self


DC = DefinabilityClass

# Covering relations of the lattice; the rest follows by closure
_COVERS = {
    DC.SEMI_ALGEBRAIC: {DC.R_AN, DC.R_EXP},
    DC.R_AN: {DC.R_AN_EXP},
    DC.R_EXP: {DC.R_AN_EXP, DC.PFAFFIAN_CLOSURE},
    DC.R_AN_EXP: {DC.TOP},
    DC.PFAFFIAN_CLOSURE: {DC.TOP},
    DC.TOP: {DC.NOT_DEFINABLE},
    DC.NOT_DEFINABLE: set(),
}


def _up_set(cls: DefinabilityClass) -> frozenset:
    seen = {cls}
    stack = [cls]
    while stack:
        for above in _COVERS[stack.pop()]:
            if above not in seen:
                seen.add(above)
                stack.append(above)
    return frozenset(seen)


_UP_SETS = {cls: _up_set(cls) for cls in DC}


def join_classes(classes: Iterable[DefinabilityClass]) -> DefinabilityClass:
    """Least upper bound in the class lattice."""
    classes = list(classes)
    if not classes:
        raise CatalogError("join_classes needs at least one class")
    common = set(DC)
    for cls in classes:
        common &= _UP_SETS[DC(cls)]
    # the least element of the common up-set is the one below all others
    for candidate in common:
        if all(candidate <= other for other in common):
            return candidate
    raise CatalogError(f"No join for {classes}")  # unreachable for a lattice


@dataclass(frozen=True)
class GateSpec:
    name: str
    input_dim: int
    param_count: int
    output_dim: int
    definability: DefinabilityClass
    format: Optional[PfaffFormat] = None
    split_format: Optional[PfaffFormat] = None
    smooth: bool = False
    # compose: gate(parents); affine: W @ parents + b; linear: fixed linear map
    kind: str = 'compose'
    elementwise: bool = False
    notes: Tuple[str, ...] = ()
    obligations: Tuple[str, ...] = ()
    provenance: Tuple[str, ...] = ()
    value_range: Optional[Tuple[float, float]] = None
    hyperparams: Tuple[Tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.format is not None and not self.definability.definable:
            raise CatalogError(f"Gate {self.name} has a format but is not definable")
        if self.kind not in ('compose', 'affine', 'linear'):
            raise CatalogError(f"Unknown gate kind {self.kind!r}")

    @property
    def has_format(self) -> bool:
        return self.format is not None

    def hyperparam_dict(self) -> Dict[str, Any]:
        return dict(self.hyperparams)


def _freeze(hp: Dict[str, Any]) -> Tuple[Tuple[str, Any], ...]:
    frozen = []
    for key in sorted(hp):
        value = hp[key]
        if isinstance(value, dict):
            value = _freeze(value)
        elif isinstance(value, list):
            value = tuple(value)
        frozen.append((key, value))
    return tuple(frozen)


def _get_int(hp: Dict[str, Any], key: str, gate: str, default: Optional[int] = None, minimum: int = 1) -> int:
    if key not in hp or hp[key] is None:
        if default is None:
            raise MissingHyperparam(f"Gate '{gate}' requires hyperparameter '{key}'")
        return default
    value = hp[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidHyperparam(f"Gate '{gate}': '{key}' must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidHyperparam(f"Gate '{gate}': '{key}' must be >= {minimum}, got {value}")
    return value


def _get_bool(hp: Dict[str, Any], key: str, gate: str, default: Optional[bool] = None) -> bool:
    if key not in hp or hp[key] is None:
        if default is None:
            raise MissingHyperparam(f"Gate '{gate}' requires hyperparameter '{key}'")
        return default
    if not isinstance(hp[key], bool):
        raise InvalidHyperparam(f"Gate '{gate}': '{key}' must be a boolean")
    return hp[key]


def _get_positive(hp: Dict[str, Any], key: str, gate: str, default: float) -> float:
    value = hp.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
        raise InvalidHyperparam(f"Gate '{gate}': '{key}' must be positive, got {value!r}")
    return float(value)


# Formats derived with the algebra

def attention_format_with_trail(T: int, score_degree: int, value_degree: int = 1) -> Tuple[PfaffFormat, List[str]]:
    """
    Format of one attention row together with its derivation trail.

    Chain: e^{s_1}, ..., e^{s_T}, then g = 1/(sum of the exponentials).
    Each weight e^{s_i} * g lives on that single chain; the row is the sum of
    weight * value over the T tokens.
    """
    if isinstance(T, bool) or not isinstance(T, int) or T < 1:
        raise InvalidSequenceLength(f"Sequence length must be >= 1, got {T!r}")
    if score_degree < 1:
        raise InvalidHyperparam(f"Score degree must be >= 1, got {score_degree}")
    value = PfaffFormat(0, 0, max(value_degree, 1))
    trail = []
    if T == 1:
        trail.append("T=1: softmax weight is the constant 1; row equals the value projection")
        trail.append(f"row = {value}")
        return value, trail

    exp_gate = fmt_exp_of_poly(score_degree)
    trail.append(f"exp(score) with score degree {score_degree}: {exp_gate}")
    denominator = exp_gate
    for _ in range(T - 1):
        denominator = fmt_sum(denominator, exp_gate)
    trail.append(f"sum of {T} exponentials on disjoint chains: {denominator}")
    reciprocal = fmt_reciprocal(denominator)
    trail.append(f"append reciprocal 1/sum to the chain: {reciprocal}")
    weight = fmt_product(
        PfaffFormat(reciprocal.q, reciprocal.D, 1), reciprocal, shared_chain=True
    )
    trail.append(f"weight e^(s_i) * reciprocal on the shared chain: {weight}")
    term = fmt_product(weight, value, shared_chain=True)
    trail.append(f"weight times value projection {value}: {term}")
    row = term
    for _ in range(T - 1):
        row = fmt_sum(row, term, shared_chain=True)
    trail.append(f"sum over {T} tokens on the shared chain: {row}")
    return row, trail


def attention_format(T: int, score_degree: int, value_degree: int = 1) -> PfaffFormat:
    """Format bound for one softmax attention row."""
    fmt, _ = attention_format_with_trail(T, score_degree, value_degree)
    return fmt


def softmax_format(n: int) -> PfaffFormat:
    """Softmax over n logits, each logit affine in the gate input."""
    if n < 1:
        raise InvalidHyperparam(f"softmax needs at least one logit, got {n}")
    if n == 1:
        return AFFINE
    exp_gate = fmt_exp_of_poly(1)
    denominator = exp_gate
    for _ in range(n - 1):
        denominator = fmt_sum(denominator, exp_gate)
    reciprocal = fmt_reciprocal(denominator)
    return fmt_product(PfaffFormat(reciprocal.q, reciprocal.D, 1), reciprocal, shared_chain=True)


def gelu_tanh_format() -> PfaffFormat:
    """x/2 * (1 + tanh(c * (x + a x**3)))."""
    inner = fmt_compose(PfaffFormat(1, 2, 1), [PfaffFormat(0, 0, 3)])
    shifted = fmt_sum(inner, CONSTANT, shared_chain=True)
    return fmt_product(AFFINE, shifted, shared_chain=True)


def exp_squashed_loss_format() -> PfaffFormat:
    """1 - exp(-(y_hat - y)**2)."""
    return fmt_sum(fmt_exp_of_poly(2), CONSTANT, shared_chain=True)


NORMALIZATION_FORMAT = PfaffFormat(1, 4, 2)


# Per-gate builders

def _elementwise(name: str, cls: DefinabilityClass, fmt: Optional[PfaffFormat],
                 notes: Tuple[str, ...] = (), params_per_unit: int = 0, shared_params: int = 0,
                 input_factor: int = 1) -> Callable[[Dict[str, Any]], GateSpec]:
    def build(hp: Dict[str, Any]) -> GateSpec:
        width = _get_int(hp, 'width', name, default=1)
        return GateSpec(
            name=name,
            input_dim=input_factor * width,
            param_count=params_per_unit * width + shared_params,
            output_dim=width,
            definability=cls,
            format=fmt,
            split_format=fmt,
            smooth=fmt is not None,
            elementwise=True,
            notes=notes,
        )
    return build


def _affine(hp: Dict[str, Any]) -> GateSpec:
    in_dim = _get_int(hp, 'in_dim', 'affine')
    out_dim = _get_int(hp, 'out_dim', 'affine')
    rows = _get_int(hp, 'rows', 'affine', default=1)
    bias = _get_bool(hp, 'bias', 'affine', default=True)
    if in_dim % rows or out_dim % rows:
        raise InvalidHyperparam(f"affine: rows={rows} must divide in_dim={in_dim} and out_dim={out_dim}")
    per_row_in, per_row_out = in_dim // rows, out_dim // rows
    notes = ('row-shared weights',) if rows > 1 else ()
    return GateSpec(
        name='affine', input_dim=in_dim, output_dim=out_dim,
        param_count=per_row_out * (per_row_in + (1 if bias else 0)),
        definability=DC.SEMI_ALGEBRAIC, format=PfaffFormat(0, 0, 2), split_format=AFFINE,
        smooth=True, kind='affine', notes=notes,
    )


def _conv1d(hp: Dict[str, Any]) -> GateSpec:
    c_in = _get_int(hp, 'in_channels', 'conv1d')
    c_out = _get_int(hp, 'out_channels', 'conv1d')
    kernel = _get_int(hp, 'kernel_size', 'conv1d')
    length = _get_int(hp, 'length', 'conv1d')
    if kernel > length:
        raise InvalidHyperparam(f"conv1d: kernel_size {kernel} exceeds length {length}")
    return GateSpec(
        name='conv1d', input_dim=c_in * length, output_dim=c_out * (length - kernel + 1),
        param_count=c_out * (c_in * kernel + 1),
        definability=DC.SEMI_ALGEBRAIC, format=PfaffFormat(0, 0, 2), split_format=AFFINE,
        smooth=True, kind='affine', notes=('Toeplitz map; kernel parameters reused across positions',),
    )


def _embedding(hp: Dict[str, Any]) -> GateSpec:
    vocab = _get_int(hp, 'vocab', 'embedding')
    dim = _get_int(hp, 'dim', 'embedding')
    tokens = _get_int(hp, 'tokens', 'embedding', default=1)
    return GateSpec(
        name='embedding', input_dim=tokens * vocab, output_dim=tokens * dim,
        param_count=vocab * dim,
        definability=DC.SEMI_ALGEBRAIC, format=PfaffFormat(0, 0, 2), split_format=AFFINE,
        smooth=True, kind='affine', notes=('tokens enter as one-hot rows',),
    )


def _batch_norm_inference(hp: Dict[str, Any]) -> GateSpec:
    width = _get_int(hp, 'width', 'batch_norm_inference')
    return GateSpec(
        name='batch_norm_inference', input_dim=width, output_dim=width, param_count=2 * width,
        definability=DC.SEMI_ALGEBRAIC, format=PfaffFormat(0, 0, 2), split_format=AFFINE,
        smooth=True, kind='affine', notes=('fixed population statistics: affine at inference',),
    )


def _relu_power(hp: Dict[str, Any]) -> GateSpec:
    power = _get_int(hp, 'power', 'relu_power', default=2)
    spec = _elementwise('relu_power', DC.SEMI_ALGEBRAIC, None, notes=('piecewise polynomial',))(hp)
    return replace(spec, notes=spec.notes + (f'power {power}',))


def _prelu(hp: Dict[str, Any]) -> GateSpec:
    channels = _get_int(hp, 'channels', 'prelu', default=1)
    return _elementwise('prelu', DC.SEMI_ALGEBRAIC, None, notes=('piecewise linear',),
                        shared_params=channels)(hp)


def _spline(hp: Dict[str, Any]) -> GateSpec:
    coefficients = _get_int(hp, 'coefficients', 'spline', default=4)
    return _elementwise('spline', DC.SEMI_ALGEBRAIC, None,
                        notes=('piecewise polynomial with fixed knots',),
                        params_per_unit=coefficients)(hp)


def _maxout(hp: Dict[str, Any]) -> GateSpec:
    width = _get_int(hp, 'width', 'maxout', default=1)
    pieces = _get_int(hp, 'pieces', 'maxout', default=2)
    return GateSpec(
        name='maxout', input_dim=width * pieces, output_dim=width, param_count=0,
        definability=DC.SEMI_ALGEBRAIC, notes=('max over affine pieces',),
    )


def _winner_take_all(hp: Dict[str, Any]) -> GateSpec:
    width = _get_int(hp, 'width', 'winner_take_all', default=1)
    return GateSpec(
        name='winner_take_all', input_dim=width, output_dim=width, param_count=0,
        definability=DC.SEMI_ALGEBRAIC, notes=('keeps the largest coordinate',),
    )


def _softmax(hp: Dict[str, Any]) -> GateSpec:
    width = _get_int(hp, 'width', 'softmax', default=1)
    fmt = softmax_format(width)
    return GateSpec(
        name='softmax', input_dim=width, output_dim=width, param_count=0,
        definability=DC.R_EXP, format=fmt, split_format=fmt, smooth=True,
    )


def _attention_variant(variant: str) -> Callable[[Dict[str, Any]], GateSpec]:
    def build(hp: Dict[str, Any]) -> GateSpec:
        tokens = _get_int(hp, 'tokens', variant)
        d_model = _get_int(hp, 'd_model', variant)
        d_out = _get_int(hp, 'd_out', variant, default=d_model)
        heads = _get_int(hp, 'heads', variant, default=1)
        d_k = _get_int(hp, 'd_k', variant)
        d_v = _get_int(hp, 'd_v', variant)
        # scores scaled by 1/temperature: a constant factor, the format does not move
        temperature = _get_positive(hp, 'temperature', variant, 1.0)
        notes = ['attention format derived with the composition lemmas']
        if temperature != 1.0:
            notes.append(f'score temperature {temperature:g}')

        if variant == 'cross_attention':
            source = _get_int(hp, 'source_tokens', variant)
            d_source = _get_int(hp, 'd_source', variant, default=d_model)
            input_dim = tokens * d_model + source * d_source
            params = heads * (d_model * d_k + d_source * (d_k + d_v)) + heads * d_v * d_out + d_model * d_out
            span = source
        else:
            input_dim = tokens * d_model
            params = heads * d_model * (2 * d_k + d_v) + heads * d_v * d_out + d_model * d_out
            span = tokens
            if variant == 'sliding_window_attention':
                window = _get_int(hp, 'window', variant)
                span = min(tokens, window)
                notes.append(f'fixed window of {window} tokens')

        split_row, trail = attention_format_with_trail(span, 2, 2)
        joint_row, _ = attention_format_with_trail(span, 4, 3)
        split_fmt = fmt_sum(fmt_replicate(split_row, tokens * heads), AFFINE, shared_chain=True)
        joint_fmt = fmt_sum(fmt_replicate(joint_row, tokens * heads), PfaffFormat(0, 0, 2), shared_chain=True)
        return GateSpec(
            name=variant, input_dim=input_dim, output_dim=tokens * d_out, param_count=params,
            definability=DC.R_EXP, format=joint_fmt, split_format=split_fmt, smooth=True,
            notes=tuple(notes), provenance=tuple(trail),
        )
    return build


def _normalization(name: str) -> Callable[[Dict[str, Any]], GateSpec]:
    def build(hp: Dict[str, Any]) -> GateSpec:
        width = _get_int(hp, 'width', name)
        tokens = _get_int(hp, 'tokens', name, default=1)
        affine = _get_bool(hp, 'affine', name, default=False)
        _get_positive(hp, 'eps', name, 1e-5)
        base = PfaffFormat(1, 4, 3) if affine else NORMALIZATION_FORMAT
        fmt = fmt_replicate(base, tokens)
        return GateSpec(
            name=name, input_dim=tokens * width, output_dim=tokens * width,
            param_count=2 * width if affine else 0,
            definability=DC.SEMI_ALGEBRAIC, format=fmt, split_format=fmt, smooth=True,
            notes=('chain (variance + eps)^(-1/2), analytic because eps > 0',),
        )
    return build


def _pool(name: str) -> Callable[[Dict[str, Any]], GateSpec]:
    def build(hp: Dict[str, Any]) -> GateSpec:
        width = _get_int(hp, 'width', name)
        window = _get_int(hp, 'window', name, default=width)
        if width % window:
            raise InvalidHyperparam(f"{name}: window {window} must divide width {width}")
        average = name == 'avg_pool'
        return GateSpec(
            name=name, input_dim=width, output_dim=width // window, param_count=0,
            definability=DC.SEMI_ALGEBRAIC,
            format=AFFINE if average else None, split_format=AFFINE if average else None,
            smooth=average, kind='linear' if average else 'compose',
        )
    return build


def _fourier_pe(hp: Dict[str, Any]) -> GateSpec:
    tokens = _get_int(hp, 'tokens', 'fourier_pe')
    dim = _get_int(hp, 'dim', 'fourier_pe')
    in_dim = _get_int(hp, 'in_dim', 'fourier_pe')
    domain = hp.get('domain', 'finite')
    trainable = _get_bool(hp, 'trainable_freq', 'fourier_pe', default=False)
    freq_bounded = _get_bool(hp, 'freq_bounded', 'fourier_pe', default=False)
    if domain not in ('finite', 'bounded', 'unbounded'):
        raise InvalidHyperparam(f"fourier_pe: unknown domain {domain!r}")
    if trainable and (domain == 'unbounded' or not freq_bounded):
        raise UnboundedDomain(
            "fourier_pe: trainable frequencies need a bounded position domain and a bounded "
            "frequency domain; sine over an unbounded set has infinitely many connected components"
        )

    params = dim if trainable else 0
    fmt = None
    notes = []
    if domain == 'unbounded':
        cls = DC.NOT_DEFINABLE
        notes.append('sine on an unbounded domain has infinitely many connected components')
    elif domain == 'finite' and not trainable:
        cls = DC.SEMI_ALGEBRAIC
        fmt = AFFINE
        notes.append('finitely many fixed positions: a constant table')
    else:
        cls = DC.R_AN
        notes.append('restricted analytic on a bounded domain')
    return GateSpec(
        name='fourier_pe', input_dim=in_dim, output_dim=tokens * dim, param_count=params,
        definability=cls, format=fmt, split_format=fmt, smooth=fmt is not None, notes=tuple(notes),
    )


def _deq(hp: Dict[str, Any]) -> GateSpec:
    in_dim = _get_int(hp, 'in_dim', 'deq')
    out_dim = _get_int(hp, 'out_dim', 'deq')
    params = _get_int(hp, 'params', 'deq', default=0, minimum=0)
    if not hp.get('fixed_point_asserted'):
        raise MissingHyperparam(
            "deq: 'fixed_point_asserted' must be true; the fixed point must exist and be unique"
        )
    try:
        f_class = DC(hp.get('f_class', DC.SEMI_ALGEBRAIC.value))
        g_class = DC(hp.get('g_class', DC.SEMI_ALGEBRAIC.value))
    except ValueError as exc:
        raise InvalidHyperparam(f"deq: {exc}") from exc
    return GateSpec(
        name='deq', input_dim=in_dim, output_dim=out_dim, param_count=params,
        definability=join_classes([f_class, g_class]),
        obligations=('deq: existence and uniqueness of the fixed point asserted by the user',),
    )


def _residual_add(hp: Dict[str, Any]) -> GateSpec:
    width = _get_int(hp, 'width', 'residual_add')
    arity = _get_int(hp, 'arity', 'residual_add', default=2)
    return GateSpec(
        name='residual_add', input_dim=arity * width, output_dim=width, param_count=0,
        definability=DC.SEMI_ALGEBRAIC, format=AFFINE, split_format=AFFINE, smooth=True, kind='linear',
    )


def _concat(hp: Dict[str, Any]) -> GateSpec:
    width = _get_int(hp, 'width', 'concat')
    return GateSpec(
        name='concat', input_dim=width, output_dim=width, param_count=0,
        definability=DC.SEMI_ALGEBRAIC, format=AFFINE, split_format=AFFINE, smooth=True, kind='linear',
    )


def _polynomial(hp: Dict[str, Any]) -> GateSpec:
    degree = _get_int(hp, 'degree', 'polynomial')
    fmt = PfaffFormat(0, 0, degree)
    return _elementwise('polynomial', DC.SEMI_ALGEBRAIC, fmt)(hp)


def _pfaffian(hp: Dict[str, Any]) -> GateSpec:
    q = _get_int(hp, 'q', 'pfaffian', minimum=0)
    D = _get_int(hp, 'D', 'pfaffian', minimum=0)
    d = _get_int(hp, 'd', 'pfaffian')
    params = _get_int(hp, 'params', 'pfaffian', default=0, minimum=0)
    in_dim = _get_int(hp, 'in_dim', 'pfaffian', default=1)
    out_dim = _get_int(hp, 'out_dim', 'pfaffian', default=1)
    fmt = PfaffFormat(q, D, d)
    return GateSpec(
        name='pfaffian', input_dim=in_dim, output_dim=out_dim, param_count=params,
        definability=DC.PFAFFIAN_CLOSURE, format=fmt, split_format=fmt, smooth=True,
        notes=('user-declared Pfaffian layer on one shared chain',),
    )


class GateCatalog:
    """
    Registro inmutable de compuertas.
    Names are normalized (lower case, '-' and spaces become '_').
    """

    def __init__(self):
        self._registry: Dict[str, Dict[str, Any]] = {}
        self._aliases: Dict[str, str] = {}
        self._register_defaults()

    def _register(self, name: str, builder: Callable[[Dict[str, Any]], GateSpec], description: str,
                  example: Optional[Dict[str, Any]] = None, aliases: Tuple[str, ...] = ()):
        self._registry[name] = {
            'builder': builder,
            'description': description,
            'example': example or {},
        }
        for alias in aliases:
            self._aliases[alias] = name

    def _register_defaults(self):
        reg = self._register
        reg('affine', _affine, 'Affine layer W x + b', {'in_dim': 1, 'out_dim': 1}, aliases=('linear', 'dense'))
        reg('conv1d', _conv1d, 'Convolution as a Toeplitz affine map',
            {'in_channels': 1, 'out_channels': 1, 'kernel_size': 1, 'length': 1}, aliases=('conv',))
        reg('embedding', _embedding, 'Embedding table lookup', {'vocab': 1, 'dim': 1})
        reg('batch_norm_inference', _batch_norm_inference, 'Batch normalization at inference',
            {'width': 1}, aliases=('batch_norm',))

        reg('sigmoid', _elementwise('sigmoid', DC.R_EXP, PfaffFormat(1, 2, 1)), 'Logistic sigmoid')
        reg('tanh', _elementwise('tanh', DC.R_EXP, PfaffFormat(1, 2, 1)), 'Hyperbolic tangent')
        reg('softplus', _elementwise('softplus', DC.R_EXP, PfaffFormat(2, 2, 1)), 'log(1 + e^x)')
        reg('gelu', _elementwise('gelu', DC.PFAFFIAN_CLOSURE, PfaffFormat(2, 2, 2)),
            'GELU with the exact Gaussian CDF', aliases=('gelu_exact',))
        reg('gelu_tanh', _elementwise('gelu_tanh', DC.R_EXP, gelu_tanh_format(),
                                      notes=('format derived by composing tanh over a cubic',)),
            'GELU, tanh approximation')
        reg('swish', _elementwise('swish', DC.R_EXP, PfaffFormat(2, 4, 2)), 'x * sigmoid(x)', aliases=('silu',))
        reg('swiglu', _elementwise('swiglu', DC.R_EXP, fmt_product(AFFINE, PfaffFormat(2, 4, 2)),
                                   input_factor=2), 'Value half times Swish of gate half')
        reg('exp', _elementwise('exp', DC.R_EXP, PfaffFormat(1, 1, 1)), 'Exponential')
        reg('polynomial', _polynomial, 'Fixed polynomial applied coordinatewise', {'degree': 2})

        piecewise = ('piecewise polynomial',)
        reg('relu', _elementwise('relu', DC.SEMI_ALGEBRAIC, None, notes=piecewise), 'max(0, x)')
        reg('leaky_relu', _elementwise('leaky_relu', DC.SEMI_ALGEBRAIC, None, notes=piecewise), 'Leaky ReLU')
        reg('prelu', _prelu, 'ReLU with trainable negative slope')
        reg('relu_power', _relu_power, 'max(0, x)^p')
        reg('hard_tanh', _elementwise('hard_tanh', DC.SEMI_ALGEBRAIC, None, notes=piecewise), 'Clipped identity')
        reg('hard_sigmoid', _elementwise('hard_sigmoid', DC.SEMI_ALGEBRAIC, None, notes=piecewise),
            'Piecewise linear sigmoid')
        reg('spline', _spline, 'Spline activation with fixed knots (KAN edge)', aliases=('kan',))
        non_smooth = ('not smooth at 0; no global Pfaffian chain',)
        reg('elu', _elementwise('elu', DC.R_EXP, None, notes=non_smooth), 'Exponential linear unit')
        reg('selu', _elementwise('selu', DC.R_EXP, None, notes=non_smooth), 'Scaled ELU')
        reg('softsign', _elementwise('softsign', DC.SEMI_ALGEBRAIC, None), 'x / (1 + |x|)')
        reg('mish', _elementwise('mish', DC.R_EXP, None), 'x * tanh(softplus(x))')
        reg('maxout', _maxout, 'Maximum over affine pieces')
        reg('winner_take_all', _winner_take_all, 'Winner-take-all gating', aliases=('wta',))

        reg('softmax', _softmax, 'Softmax over the input coordinates')
        attention_example = {'tokens': 2, 'd_model': 1, 'd_k': 1, 'd_v': 1}
        reg('mha', _attention_variant('mha'), 'Multi-head self-attention with residual projection',
            attention_example, aliases=('attention', 'multihead_attention'))
        reg('cross_attention', _attention_variant('cross_attention'), 'Multi-head cross-attention',
            dict(attention_example, source_tokens=2))
        reg('sliding_window_attention', _attention_variant('sliding_window_attention'),
            'Self-attention restricted to a fixed window', dict(attention_example, window=1))

        for norm in ('layer_norm', 'group_norm', 'instance_norm', 'rms_norm'):
            reg(norm, _normalization(norm), norm.replace('_', ' ').capitalize(), {'width': 1})
        reg('avg_pool', _pool('avg_pool'), 'Average pooling', {'width': 1})
        reg('max_pool', _pool('max_pool'), 'Max pooling', {'width': 1})
        reg('fourier_pe', _fourier_pe, 'Fourier positional encoding',
            {'tokens': 1, 'dim': 1, 'in_dim': 1})
        reg('deq', _deq, 'Deep equilibrium layer',
            {'in_dim': 1, 'out_dim': 1, 'fixed_point_asserted': True})
        reg('residual', self._residual, 'x + F(x)', {'inner': 'sigmoid'})
        reg('gated_residual', self._gated_residual, 'x + sigmoid(g) * F(x)', {'inner': 'sigmoid'})
        reg('residual_add', _residual_add, 'Sum of equally shaped parents', {'width': 1})
        reg('concat', _concat, 'Concatenation of parents', {'width': 1})
        reg('pfaffian', _pfaffian, 'Declared Pfaffian layer', {'q': 1, 'D': 1, 'd': 1})

    def _normalize_name(self, name: str) -> str:
        if not name:
            return ''
        normalized = '_'.join(str(name).lower().replace('-', ' ').split())
        return self._aliases.get(normalized, normalized)

    def _inner(self, hp: Dict[str, Any], wrapper: str) -> GateSpec:
        if 'inner' not in hp:
            raise MissingHyperparam(f"Gate '{wrapper}' requires hyperparameter 'inner'")
        inner_hp = dict(hp.get('inner_hyperparams') or {})
        if 'width' in hp and 'width' not in inner_hp:
            inner_hp['width'] = hp['width']
        inner = self.lookup(hp['inner'], inner_hp)
        if inner.input_dim != inner.output_dim:
            raise InvalidHyperparam(
                f"{wrapper}: inner gate '{inner.name}' must preserve dimension "
                f"({inner.input_dim} -> {inner.output_dim})"
            )
        return inner

    def _residual(self, hp: Dict[str, Any]) -> GateSpec:
        inner = self._inner(hp, 'residual')
        fmt = fmt_residual(inner.format) if inner.format else None
        split = fmt_residual(inner.split_format) if inner.split_format else None
        return GateSpec(
            name='residual', input_dim=inner.input_dim, output_dim=inner.output_dim,
            param_count=inner.param_count,
            definability=join_classes([inner.definability, DC.SEMI_ALGEBRAIC]),
            format=fmt, split_format=split, smooth=fmt is not None,
            elementwise=inner.elementwise, notes=(f'wraps {inner.name}',) + inner.notes,
            obligations=inner.obligations,
        )

    def _gated_residual(self, hp: Dict[str, Any]) -> GateSpec:
        inner = self._inner(hp, 'gated_residual')
        gate_params = _get_int(hp, 'gate_params', 'gated_residual', default=0, minimum=0)
        gate = PfaffFormat(1, 2, 1)
        fmt = fmt_residual(fmt_product(gate, inner.format)) if inner.format else None
        split = fmt_residual(fmt_product(gate, inner.split_format)) if inner.split_format else None
        return GateSpec(
            name='gated_residual', input_dim=inner.input_dim, output_dim=inner.output_dim,
            param_count=inner.param_count + gate_params,
            definability=join_classes([inner.definability, DC.R_EXP]),
            format=fmt, split_format=split, smooth=fmt is not None,
            elementwise=inner.elementwise, notes=(f'wraps {inner.name} behind a sigmoid gate',) + inner.notes,
            obligations=inner.obligations,
        )

    def names(self) -> List[str]:
        return sorted(self._registry)

    def __contains__(self, name: str) -> bool:
        return self._normalize_name(name) in self._registry

    def lookup(self, name: str, hyperparams: Optional[Dict[str, Any]] = None) -> GateSpec:
        """Instantiate a catalog entry with the given hyperparameters."""
        key = self._normalize_name(name)
        if key not in self._registry:
            raise UnknownGate(f"Unknown gate '{name}'")
        hp = dict(hyperparams or {})
        spec = self._registry[key]['builder'](hp)
        return replace(spec, hyperparams=_freeze(hp))

    def describe(self, name: str) -> str:
        return self._registry[self._normalize_name(name)]['description']

    def example(self, name: str) -> GateSpec:
        """The entry instantiated with its smallest example hyperparameters."""
        key = self._normalize_name(name)
        return self.lookup(key, self._registry[key]['example'])

    def get_all_entries(self) -> List[GateSpec]:
        return [self.example(name) for name in self.names()]


# Losses

def _loss(name: str, cls: DefinabilityClass, fmt: Optional[PfaffFormat], notes: Tuple[str, ...]) -> GateSpec:
    return GateSpec(
        name=name, input_dim=2, output_dim=1, param_count=0, definability=cls,
        format=fmt, split_format=fmt, smooth=fmt is not None, notes=notes, value_range=(0.0, 1.0),
    )


_LOSSES: Dict[str, Callable[[], GateSpec]] = {
    'zero_one': lambda: _loss('zero_one', DC.SEMI_ALGEBRAIC, None,
                              ('classification indicator; handled by the classification planner',)),
    'clipped_mse': lambda: _loss('clipped_mse', DC.SEMI_ALGEBRAIC, None, ('min(1, (y_hat - y)^2)',)),
    'clipped_mae': lambda: _loss('clipped_mae', DC.SEMI_ALGEBRAIC, None, ('min(1, |y_hat - y|)',)),
    'exp_squashed_mse': lambda: _loss('exp_squashed_mse', DC.R_EXP, exp_squashed_loss_format(),
                                      ('1 - exp(-(y_hat - y)^2)',)),
}


def loss_names() -> List[str]:
    return sorted(_LOSSES)


def loss_lookup(name: str) -> GateSpec:
    key = '_'.join(str(name).lower().replace('-', ' ').split())
    if key not in _LOSSES:
        raise UnknownLoss(f"Unknown loss '{name}'; expected one of {', '.join(loss_names())}")
    return _LOSSES[key]()


_DEFAULT_CATALOG: Optional[GateCatalog] = None


def default_catalog() -> GateCatalog:
    global _DEFAULT_CATALOG
    if _DEFAULT_CATALOG is None:
        _DEFAULT_CATALOG = GateCatalog()
    return _DEFAULT_CATALOG


def lookup(name: str, hyperparams: Optional[Dict[str, Any]] = None) -> GateSpec:
    return default_catalog().lookup(name, hyperparams)
