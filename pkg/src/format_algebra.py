"""
Exact arithmetic on Pfaffian formats (q, D, d).

Every operation returns an upper bound: formats are never exact values, only
bounds that the closure lemmas guarantee. All components are Python ints, so
nothing overflows even when degrees grow like d**L.
"""

import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Sequence, Tuple

logger = logging.getLogger(__name__)


class FormatError(ValueError):
    """Base error for invalid format arithmetic."""


class NegativeComponent(FormatError):
    pass


class DegenerateInnerDegree(FormatError):
    """An inner function of a composition has degree 0 (a constant).

    Model the constant as a frozen parameter instead of composing with it.
    """


@dataclass(frozen=True)
class PfaffFormat:
    q: int
    D: int
    d: int

    def __post_init__(self):
        for name in ('q', 'D', 'd'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise FormatError(f"Format component {name} must be an integer, got {value!r}")
            if value < 0:
                raise NegativeComponent(f"Format component {name} is negative: {value}")

    def __le__(self, other: 'PfaffFormat') -> bool:
        return self.q <= other.q and self.D <= other.D and self.d <= other.d

    def __ge__(self, other: 'PfaffFormat') -> bool:
        return other <= self

    def dominates(self, other: 'PfaffFormat') -> bool:
        return other <= self

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.q, self.D, self.d)

    def __str__(self) -> str:
        return f"({self.q},{self.D},{self.d})"

    @classmethod
    def of(cls, triple: Sequence[int]) -> 'PfaffFormat':
        q, D, d = triple
        return cls(int(q), int(D), int(d))


AFFINE = PfaffFormat(0, 0, 1)
CONSTANT = PfaffFormat(0, 0, 0)


def fmt_sum(a: PfaffFormat, b: PfaffFormat, shared_chain: bool = False) -> PfaffFormat:
    """Sum of two Pfaffian functions. Disjoint chains add up unless the caller asserts they are shared."""
    q = max(a.q, b.q) if shared_chain else a.q + b.q
    return PfaffFormat(q, max(a.D, b.D), max(a.d, b.d))


def fmt_product(a: PfaffFormat, b: PfaffFormat, shared_chain: bool = False) -> PfaffFormat:
    """Product of two Pfaffian functions."""
    q = max(a.q, b.q) if shared_chain else a.q + b.q
    return PfaffFormat(q, max(a.D, b.D), a.d + b.d)


def fmt_derivative(a: PfaffFormat) -> PfaffFormat:
    # guarded for constants: D + d - 1 may be -1
    return PfaffFormat(a.q, a.D, max(0, a.D + a.d - 1))


def fmt_chain_extend(a: PfaffFormat) -> PfaffFormat:
    """Append the function itself to its chain."""
    return PfaffFormat(a.q + 1, max(a.D, a.D + a.d - 1), a.d)


def fmt_compose(outer: PfaffFormat, inners: Sequence[PfaffFormat], shared_chain: bool = False) -> PfaffFormat:
    """
    Bound for outer(inner_1, ..., inner_k).

    Args:
        outer: format of the outer function.
        inners: formats of the substituted inner functions, each with d >= 1.
        shared_chain: all inners live on a single common chain, counted once.

    Raises:
        DegenerateInnerDegree: some inner has d == 0.
    """
    if not inners:
        return outer
    for index, inner in enumerate(inners):
        if inner.d == 0:
            raise DegenerateInnerDegree(
                f"Inner function #{index} has degree 0; treat the constant as a frozen parameter"
            )
    m = max(inner.d for inner in inners)
    max_inner_D = max(inner.D for inner in inners)
    if shared_chain:
        inner_q = max(inner.q for inner in inners)
    else:
        inner_q = sum(inner.q for inner in inners)
    return PfaffFormat(
        outer.q + inner_q,
        max_inner_D + (outer.D + 1) * m - 1,
        outer.d * m,
    )


def fmt_residual(a: PfaffFormat) -> PfaffFormat:
    return PfaffFormat(a.q, a.D, max(a.d, 1))


def fmt_affine_precompose(a: PfaffFormat) -> PfaffFormat:
    """Precomposition with an affine map leaves the format unchanged.

    The caller owns the domain caveat: the result holds on the preimage of the original domain.
    """
    return a


def fmt_replicate(a: PfaffFormat, copies: int) -> PfaffFormat:
    if copies < 1:
        raise FormatError(f"copies must be >= 1, got {copies}")
    return PfaffFormat(copies * a.q, a.D, a.d)


def fmt_reciprocal(a: PfaffFormat) -> PfaffFormat:
    """Append g = 1/u to the chain of u and return the format of g.

    g' = -u' * g**2 where u' has degree at most D + d - 1.
    """
    return PfaffFormat(a.q + 1, max(a.D, a.D + a.d + 1), 1)


def fmt_exp_of_poly(degree: int) -> PfaffFormat:
    """Format of e**p for a polynomial p of the given degree."""
    if degree < 1:
        raise FormatError(f"exponent polynomial degree must be >= 1, got {degree}")
    return PfaffFormat(1, degree, 1)


def fmt_join(formats: Iterable[PfaffFormat]) -> PfaffFormat:
    """Componentwise maximum."""
    formats = list(formats)
    if not formats:
        return CONSTANT
    return PfaffFormat(
        max(f.q for f in formats),
        max(f.D for f in formats),
        max(f.d for f in formats),
    )


# Chain segments shared between graph nodes

Segment = Tuple[str, int]


@dataclass(frozen=True)
class TrackedFormat:
    """A format together with the chain segments it was built on.

    Each segment is (owner, length). Chain length equals the sum over the
    distinct segments, so a chain reached through two paths counts once.
    `frozen` marks values that do not depend on any trainable parameter.
    """
    fmt: PfaffFormat
    segments: FrozenSet[Segment] = field(default_factory=frozenset)
    frozen: bool = False

    @property
    def chain_length(self) -> int:
        return sum(length for _, length in self.segments)


FROZEN_INPUT = TrackedFormat(AFFINE, frozenset(), frozen=True)


def _union_segments(parts: Iterable[TrackedFormat]) -> FrozenSet[Segment]:
    merged = set()
    for part in parts:
        merged.update(part.segments)
    return frozenset(merged)


def tracked_compose(owner: str, outer: PfaffFormat, inners: List[TrackedFormat]) -> TrackedFormat:
    """Compose `outer` (owned by node `owner`) over tracked inner formats."""
    base = fmt_compose(outer, [inner.fmt for inner in inners])
    segments = set(_union_segments(inners))
    if outer.q > 0:
        segments.add((owner, outer.q))
    segments = frozenset(segments)
    q = sum(length for _, length in segments)
    return TrackedFormat(PfaffFormat(q, base.D, base.d), segments)


def tracked_sum(parts: List[TrackedFormat]) -> TrackedFormat:
    """Linear combination with fixed coefficients of the given parts."""
    if not parts:
        return TrackedFormat(AFFINE)
    segments = _union_segments(parts)
    q = sum(length for _, length in segments)
    joined = fmt_join(part.fmt for part in parts)
    return TrackedFormat(PfaffFormat(q, joined.D, max(joined.d, 1)), segments)


def tracked_bilinear(parts: List[TrackedFormat]) -> TrackedFormat:
    """W @ concat(parts) + b with trainable W and b."""
    combined = tracked_sum(parts)
    fmt = fmt_product(combined.fmt, AFFINE, shared_chain=True)
    return TrackedFormat(fmt, combined.segments)
