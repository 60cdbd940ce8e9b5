"""
Bound engine: exact big-integer component counts, VC and pseudo-dimension
bounds, and sample-size planners.

No floating point enters a bound. The planners use mpmath only for the
logarithms and the final division before taking the ceiling.
"""

import logging
import math
from typing import List, Optional, Sequence

from mpmath import mp, mpf
from pydantic import BaseModel, Field

from .format_algebra import PfaffFormat

logger = logging.getLogger(__name__)

PLANNER_PRECISION_DIGITS = 60

CONSTANT_CAVEAT = (
    "C is a universal constant left unquantified by the learning theorems; "
    "the value used here is a configuration knob"
)


class BoundError(ValueError):
    pass


class NonPositive(BoundError):
    pass


class NegativeBase(BoundError):
    pass


class InvalidFormat(BoundError):
    pass


class BadRange(BoundError):
    pass


class DegenerateLog(BoundError):
    pass


class BoundReport(BaseModel):
    B_log2_ceil: int = Field(ge=0)
    pdim_bound: int = Field(ge=0)
    khovanskii_M: Optional[int] = None
    p: int
    q: int
    D: int
    d: int


class SamplePlan(BaseModel):
    mode: str
    epsilon: float
    delta: float
    C: float
    K_or_pdim: int
    N: int = Field(ge=1)
    formula: str
    caveats: List[str] = Field(default_factory=list)


def _check_int(name: str, value: int, minimum: int = 0):
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidFormat(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidFormat(f"{name} must be >= {minimum}, got {value}")


def ceil_log2(x: int) -> int:
    """Smallest k with 2**k >= x."""
    if isinstance(x, bool) or not isinstance(x, int):
        raise NonPositive(f"ceil_log2 needs a positive integer, got {x!r}")
    if x < 1:
        raise NonPositive(f"ceil_log2 needs x >= 1, got {x}")
    return (x - 1).bit_length()


def khovanskii_count(n: int, q: int, D: int, degrees: Sequence[int]) -> int:
    """
    Cap on nondegenerate solutions of n Pfaffian equations in n variables:
    2^{q(q-1)/2} * prod(d_i) * (min(n, q) D + sum(d_i) - n + 1)^q.
    """
    _check_int('n', n, 1)
    _check_int('q', q)
    _check_int('D', D)
    degrees = list(degrees)
    if len(degrees) != n:
        raise InvalidFormat(f"expected {n} degrees, got {len(degrees)}")
    for degree in degrees:
        _check_int('degree', degree)
    base = min(n, q) * D + sum(degrees) - n + 1
    if base < 0:
        raise NegativeBase(f"Khovanskii base is negative ({base}); invalid format combination")
    return 2 ** (q * (q - 1) // 2) * math.prod(degrees) * base ** q


def _check_component_args(p: int, q: int, D: int, d: int):
    _check_int('p', p, 1)
    _check_int('q', q)
    _check_int('D', D)
    _check_int('d', d)
    if d == 0 and q > 0:
        raise InvalidFormat(
            f"d=0 with q={q}: a degree-0 function never reads its chain; give it as q=0, d=0 (a constant)"
        )


def component_bound_B(p: int, q: int, D: int, d: int) -> int:
    """Worst-case count of connected components, exact."""
    _check_component_args(p, q, D, d)
    if d == 0:
        # degree 0: the function is a constant and every level set is one piece
        return 1
    # S is the shared base of the degree factors
    S = p * (D + d - 1) + 1
    pq = p * q
    return 2 ** (pq * (pq - 1) // 2) * d ** p * S ** p * ((p + 1) * S) ** pq


def component_bound_for_rank(p: int, r: int, q: int, D: int, d: int) -> int:
    """Component count when r of the p equations are active; B dominates every rank."""
    _check_component_args(p, q, D, d)
    if not 0 <= r <= p:
        raise InvalidFormat(f"rank must lie in [0, {p}], got {r}")
    if d == 0:
        return 1
    S = p * D + 1 + r * (d - 1)
    rq = r * q
    return (2 ** (rq * (rq - 1) // 2) * d ** r * S ** (p - r)
            * ((p - r + 1) * S - (p - r)) ** rq)


def km_vc_bound(p: int, s: int, B: int) -> int:
    if p < 1 or s < 1 or B < 1:
        raise InvalidFormat(f"km_vc_bound needs p, s, B >= 1, got {(p, s, B)}")
    return 2 * ceil_log2(B) + (16 + 2 * ceil_log2(s)) * p


def expanded_pdim_bound(p: int, q: int, D: int, d: int) -> float:
    """Real-valued expansion of 16p + 2 log2 B; the exact route never falls below it."""
    _check_component_args(p, q, D, d)
    if d == 0:
        return float(16 * p)
    S = p * (D + d - 1) + 1
    pq = p * q
    return (16 * p + pq * (pq - 1) + 2 * p * math.log2(d) + 2 * p * math.log2(S)
            + 2 * pq * math.log2(p + 1) + 2 * pq * math.log2(S))


def pnn_pdim_bound(fmt: PfaffFormat, p: int, with_khovanskii: bool = False) -> BoundReport:
    """Pseudo-dimension bound from the exact component count B, then 16p + 2 ceil_log2(B)."""
    _check_component_args(p, fmt.q, fmt.D, fmt.d)
    B = component_bound_B(p, fmt.q, fmt.D, fmt.d)
    log_b = ceil_log2(B)
    report = BoundReport(
        B_log2_ceil=log_b,
        pdim_bound=km_vc_bound(p, 1, B),
        p=p, q=fmt.q, D=fmt.D, d=fmt.d,
    )
    if with_khovanskii and fmt.d > 0:
        report.khovanskii_M = khovanskii_count(p, fmt.q, fmt.D, [fmt.d] * p)
    logger.debug("pdim bound for %s with p=%d: B has %d bits, pdim <= %d", fmt, p, log_b, report.pdim_bound)
    return report


# Sample-size planners

def _check_plan_ranges(K: int, epsilon: float, delta: float, C: float):
    if isinstance(K, bool) or not isinstance(K, int) or K < 1:
        raise BadRange(f"K must be an integer >= 1, got {K!r}")
    if not 0 < epsilon <= 1:
        raise BadRange(f"epsilon must lie in (0, 1], got {epsilon}")
    if not 0 < delta <= 1:
        raise BadRange(f"delta must lie in (0, 1], got {delta}")
    if not C > 0:
        raise BadRange(f"C must be positive, got {C}")


def _exact(value: float) -> mpf:
    # through str so 0.1 stays the decimal 0.1
    return mpf(str(value))


def sample_size_classification(K: int, epsilon: float, delta: float, C: float = 1.0) -> SamplePlan:
    """N = ceil(C (K + ln(1/delta)) / epsilon^2)."""
    _check_plan_ranges(K, epsilon, delta, C)
    with mp.workdps(PLANNER_PRECISION_DIGITS):
        eps, dlt, c = _exact(epsilon), _exact(delta), _exact(C)
        value = c * (K + mp.log(1 / dlt)) / eps ** 2
        N = max(1, int(mp.ceil(value)))
    return SamplePlan(
        mode='classification', epsilon=epsilon, delta=delta, C=C, K_or_pdim=K, N=N,
        formula=f"N = ceil({C} * ({K} + ln(1/{delta})) / {epsilon}^2)",
        caveats=[CONSTANT_CAVEAT],
    )


def sample_size_regression(K: int, epsilon: float, delta: float, C: float = 1.0) -> SamplePlan:
    """N = ceil(C (K ln^2(K/epsilon) + ln(1/delta)) / epsilon^2)."""
    _check_plan_ranges(K, epsilon, delta, C)
    with mp.workdps(PLANNER_PRECISION_DIGITS):
        eps, dlt, c = _exact(epsilon), _exact(delta), _exact(C)
        ratio = K / eps
        if ratio <= 1:
            raise DegenerateLog(f"K/epsilon must exceed 1, got {mp.nstr(ratio, 6)}")
        value = c * (K * mp.log(ratio) ** 2 + mp.log(1 / dlt)) / eps ** 2
        N = max(1, int(mp.ceil(value)))
    return SamplePlan(
        mode='regression', epsilon=epsilon, delta=delta, C=C, K_or_pdim=K, N=N,
        formula=f"N = ceil({C} * ({K} * ln^2({K}/{epsilon}) + ln(1/{delta})) / {epsilon}^2)",
        caveats=[CONSTANT_CAVEAT],
    )


def plan(K: int, epsilon: float, delta: float, mode: str = 'classification', C: float = 1.0) -> SamplePlan:
    if mode == 'classification':
        return sample_size_classification(K, epsilon, delta, C)
    if mode == 'regression':
        return sample_size_regression(K, epsilon, delta, C)
    raise BadRange(f"mode must be classification or regression, got {mode!r}")
