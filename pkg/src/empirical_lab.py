"""
Empirical lab: brute-force lower bounds on VC, pseudo- and
fat-shattering dimensions, sublevel component counts and real root counts.

Every result is a lower bound computed on finite grids, paired by the verify
harness with the symbolic upper bound for the same instance.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from .format_algebra import AFFINE, PfaffFormat, fmt_compose, fmt_product, fmt_sum
from .sweep_runner import SweepRunner

logger = logging.getLogger(__name__)

MAX_SHATTER_D = 12
DEFAULT_BUDGET = 2_000_000


class LabError(ValueError):
    pass


class GridTooLarge(LabError):
    pass


class ZeroPolynomial(LabError):
    pass


class WitnessMismatch(LabError):
    pass


Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


def make_grid(ranges: Sequence[Tuple[float, float]], resolution: int) -> np.ndarray:
    """Cartesian grid with `resolution` evenly spaced points per axis, shape (resolution**k, k)."""
    if resolution < 1:
        raise LabError(f"resolution must be >= 1, got {resolution}")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in ranges]
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class ParametricFamily:
    """
    f(x, theta) on finite input and parameter grids.

    The evaluator is vectorized: X of shape (k, n) and Theta of shape (j, p)
    give the (k, j) matrix of values.
    """
    name: str
    evaluator: Evaluator
    input_ranges: List[Tuple[float, float]]
    param_ranges: List[Tuple[float, float]]
    input_resolution: int = 7
    param_resolution: int = 5
    fmt: Optional[PfaffFormat] = None
    input_points: Optional[np.ndarray] = None
    param_points: Optional[np.ndarray] = None
    description: str = ''
    # classifiers are 1[f > vc_threshold]
    vc_threshold: float = 0.0

    @property
    def input_dim(self) -> int:
        return len(self.input_ranges)

    @property
    def param_dim(self) -> int:
        return len(self.param_ranges)

    @cached_property
    def input_grid(self) -> np.ndarray:
        if self.input_points is not None:
            return np.asarray(self.input_points, dtype=float).reshape(-1, self.input_dim)
        return make_grid(self.input_ranges, self.input_resolution)

    @cached_property
    def param_grid(self) -> np.ndarray:
        if self.param_points is not None:
            return np.asarray(self.param_points, dtype=float).reshape(-1, self.param_dim)
        return make_grid(self.param_ranges, self.param_resolution)

    @cached_property
    def values(self) -> np.ndarray:
        return self.evaluate(self.input_grid, self.param_grid)

    def evaluate(self, X: np.ndarray, Theta: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.input_dim)
        Theta = np.asarray(Theta, dtype=float).reshape(-1, self.param_dim)
        return np.asarray(self.evaluator(X, Theta), dtype=float).reshape(len(X), len(Theta))

    def describe(self) -> str:
        return (f"{self.name}: n={self.input_dim}, p={self.param_dim}, "
                f"{len(self.input_grid)} inputs x {len(self.param_grid)} parameters")


@dataclass
class ProbeResult:
    kind: str
    value: int
    witness: Dict[str, Any] = field(default_factory=dict)
    instance: str = ''
    checks: int = 0


# Families

def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def affine_1d(input_range=(-1.0, 1.0), param_range=(-1.0, 1.0), input_resolution=7, param_resolution=5,
              **_: Any) -> ParametricFamily:
    return ParametricFamily(
        name='affine_1d',
        evaluator=lambda X, T: X[:, :1] * T[None, :, 0] + T[None, :, 1],
        input_ranges=[tuple(input_range)], param_ranges=[tuple(param_range)] * 2,
        input_resolution=input_resolution, param_resolution=param_resolution,
        fmt=AFFINE, description='theta1 * x + theta2',
    )


def sigmoid_neuron(input_range=(-2.0, 2.0), param_range=(-3.0, 3.0), input_resolution=7, param_resolution=7,
                   **_: Any) -> ParametricFamily:
    return ParametricFamily(
        name='sigmoid_neuron',
        evaluator=lambda X, T: _sigmoid(X[:, :1] * T[None, :, 0] + T[None, :, 1]),
        input_ranges=[tuple(input_range)], param_ranges=[tuple(param_range)] * 2,
        input_resolution=input_resolution, param_resolution=param_resolution,
        fmt=fmt_compose(PfaffFormat(1, 2, 1), [AFFINE]), description='sigmoid(theta1 * x + theta2)',
        vc_threshold=0.5,
    )


def two_layer_sigmoid(input_range=(-2.0, 2.0), param_range=(-2.0, 2.0), input_resolution=6, param_resolution=4,
                      **_: Any) -> ParametricFamily:
    hidden = fmt_compose(PfaffFormat(1, 2, 1), [AFFINE])
    return ParametricFamily(
        name='two_layer_sigmoid',
        evaluator=lambda X, T: (T[None, :, 2] * _sigmoid(X[:, :1] * T[None, :, 0] + T[None, :, 1])
                                + T[None, :, 3]),
        input_ranges=[tuple(input_range)], param_ranges=[tuple(param_range)] * 4,
        input_resolution=input_resolution, param_resolution=param_resolution,
        fmt=fmt_sum(fmt_product(hidden, AFFINE, shared_chain=True), AFFINE, shared_chain=True),
        description='a * sigmoid(w * x + b) + c',
    )


def exp_linear(input_range=(-5.0, 5.0), param_range=(-1.0, 1.0), input_resolution=9, param_resolution=5,
               **_: Any) -> ParametricFamily:
    return ParametricFamily(
        name='exp_linear',
        evaluator=lambda X, T: T[None, :, 0] + T[None, :, 1] * X[:, :1] + T[None, :, 2] * np.exp(X[:, :1]),
        input_ranges=[tuple(input_range)], param_ranges=[tuple(param_range)] * 3,
        input_resolution=input_resolution, param_resolution=param_resolution,
        fmt=AFFINE, description='a + b * x + c * e^x (linear in the parameters)',
    )


def constant_family(value: float = 0.5, input_range=(-1.0, 1.0), input_resolution=5, param_resolution=3,
                    **_: Any) -> ParametricFamily:
    return ParametricFamily(
        name='constant',
        evaluator=lambda X, T: np.full((len(X), len(T)), float(value)),
        input_ranges=[tuple(input_range)], param_ranges=[(-1.0, 1.0)],
        input_resolution=input_resolution, param_resolution=param_resolution,
        fmt=AFFINE, description=f'f = {value}',
    )


FAMILIES: Dict[str, Callable[..., ParametricFamily]] = {
    'affine_1d': affine_1d,
    'sigmoid_neuron': sigmoid_neuron,
    'two_layer_sigmoid': two_layer_sigmoid,
    'exp_linear': exp_linear,
    'constant': constant_family,
}


def build_family(name: str, **options: Any) -> ParametricFamily:
    if name not in FAMILIES:
        raise LabError(f"Unknown family '{name}'; expected one of {', '.join(sorted(FAMILIES))}")
    return FAMILIES[name](**options)


# Shattered-set search

class _SplitSearch:
    """
    Depth-first search for thresholds that split every group of parameter
    columns into a below part and an above part, one input point at a time.
    After d points there are 2**d nonempty groups exactly when the points
    are shattered.
    """

    def __init__(self, rows: np.ndarray, margin: Optional[float]):
        self.margin = margin
        # duplicate columns realize the same pattern
        self.columns, self.first_index = np.unique(rows.T, axis=0, return_index=True)
        self.d = rows.shape[0]
        self.trials = 0
        self.thresholds: List[float] = []
        self.final_groups: List[np.ndarray] = []

    def _split(self, values: np.ndarray, group: np.ndarray, r: float) -> Tuple[np.ndarray, np.ndarray]:
        v = values[group]
        if self.margin is None:
            return group[v <= r], group[v > r]
        return group[v <= r - self.margin], group[v >= r + self.margin]

    def _candidates(self, values: np.ndarray, groups: List[np.ndarray]) -> np.ndarray:
        # r must leave every group nonempty on both sides
        lo = max(values[g].min() for g in groups)
        hi = min(values[g].max() for g in groups)
        if self.margin is None:
            return np.unique(values[(values >= lo) & (values < hi)])
        shifted = np.unique(values) + self.margin
        return shifted[(shifted - self.margin >= lo) & (shifted + self.margin <= hi)]

    def search(self, i: int = 0, groups: Optional[List[np.ndarray]] = None) -> bool:
        if groups is None:
            groups = [np.arange(len(self.columns))]
        if i == self.d:
            self.final_groups = groups
            return True
        # each half must still hold enough columns for the remaining points
        need = 2 ** (self.d - i - 1)
        values = self.columns[:, i]
        for r in self._candidates(values, groups):
            self.trials += 1
            split_groups = []
            for group in groups:
                below, above = self._split(values, group, float(r))
                if len(below) < need or len(above) < need:
                    break
                split_groups.extend((below, above))
            else:
                self.thresholds.append(float(r))
                if self.search(i + 1, split_groups):
                    return True
                self.thresholds.pop()
        return False

    def representatives(self) -> List[int]:
        """Original column index realizing each pattern, pattern bits most significant first."""
        return [int(self.first_index[group[0]]) for group in self.final_groups]


def _check_subset_threshold(values: np.ndarray, subset: Tuple[int, ...], margin: Optional[float]):
    search = _SplitSearch(values[list(subset)], margin)
    found = search.search()
    witness = None
    if found:
        witness = {'thresholds': list(search.thresholds), 'columns': search.representatives()}
    return found, witness, search.trials


def _check_subset_vc(values: np.ndarray, subset: Tuple[int, ...], threshold: float = 0.0):
    labels = values[list(subset)] > threshold
    # one integer code per column; shattered iff all 2**d codes occur
    weights = (1 << np.arange(len(subset) - 1, -1, -1)).reshape(-1, 1)
    codes = (labels * weights).sum(axis=0)
    unique, first = np.unique(codes, return_index=True)
    if len(unique) < 2 ** len(subset):
        return False, None, 1
    return True, {'thresholds': [threshold] * len(subset), 'columns': [int(c) for c in first]}, 1


def _next_level(shattered: List[Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    """Apriori join: (k+1)-subsets all of whose k-subsets are shattered."""
    known = set(shattered)
    candidates = set()
    for a, b in itertools.combinations(sorted(shattered), 2):
        if a[:-1] == b[:-1]:
            merged = tuple(sorted(set(a) | set(b)))
            if all(sub in known for sub in itertools.combinations(merged, len(merged) - 1)):
                candidates.add(merged)
    return sorted(candidates)


def _shatter_probe(fam: ParametricFamily, kind: str, max_d: int, budget: int, workers: int,
                   checker: Callable[[np.ndarray, Tuple[int, ...]], Tuple[bool, Any, int]],
                   extra: Optional[Dict[str, Any]] = None) -> ProbeResult:
    if max_d > MAX_SHATTER_D:
        raise GridTooLarge(f"max_d={max_d} exceeds the enumeration guard of {MAX_SHATTER_D}")
    values = fam.values
    runner = SweepRunner(max_workers=workers)
    best = ProbeResult(kind=kind, value=0, instance=fam.describe(), witness=dict(extra or {}))
    level = [(i,) for i in range(len(fam.input_grid))]
    planned = 0
    checks = 0
    d = 1
    while level and d <= max_d:
        planned += len(level) * 2 ** d
        if planned > budget:
            raise GridTooLarge(
                f"{fam.name}: level {d} needs {planned} pattern checks, budget is {budget}"
            )
        outcomes = runner.map(lambda subset: checker(values, subset), level, name=f'{kind}-level-{d}')
        shattered = []
        for subset, (ok, witness, trials) in zip(level, outcomes):
            checks += trials
            if ok:
                shattered.append(subset)
                if best.value < d:
                    best.value = d
                    best.witness = dict(extra or {})
                    best.witness.update({
                        'points': fam.input_grid[list(subset)].tolist(),
                        'thresholds': witness['thresholds'],
                        'params': fam.param_grid[witness['columns']].tolist(),
                    })
        logger.debug("%s %s: %d of %d subsets of size %d shattered", kind, fam.name, len(shattered), len(level), d)
        if not shattered:
            break
        level = _next_level(shattered)
        d += 1
    best.checks = checks
    return best


def pdim_lower_bound(fam: ParametricFamily, max_d: int = 6, budget: int = DEFAULT_BUDGET,
                     workers: int = 1) -> ProbeResult:
    """Largest pseudo-shattered subset of the input grid (strict '>' above the threshold)."""
    return _shatter_probe(fam, 'pdim_lb', max_d, budget, workers,
                          lambda values, subset: _check_subset_threshold(values, subset, None))


def fat_lower_bound(fam: ParametricFamily, gamma: float, max_d: int = 6, budget: int = DEFAULT_BUDGET,
                    workers: int = 1) -> ProbeResult:
    """Largest subset shattered with margin gamma (>= r + gamma above, <= r - gamma below)."""
    if gamma <= 0:
        raise LabError(f"gamma must be positive, got {gamma}")
    return _shatter_probe(fam, 'fat_lb', max_d, budget, workers,
                          lambda values, subset: _check_subset_threshold(values, subset, gamma),
                          extra={'gamma': gamma})


def vc_lower_bound(fam: ParametricFamily, max_d: int = 6, budget: int = DEFAULT_BUDGET,
                   workers: int = 1) -> ProbeResult:
    """Largest subset shattered by the classifiers 1[f(x, theta) > fam.vc_threshold]."""
    return _shatter_probe(fam, 'vc_lb', max_d, budget, workers,
                          lambda values, subset: _check_subset_vc(values, subset, fam.vc_threshold))


def replay_witness(fam: ParametricFamily, result: ProbeResult) -> int:
    """Re-evaluate a witness and return the value it certifies."""
    if result.kind in ('pdim_lb', 'fat_lb', 'vc_lb'):
        if result.value == 0:
            return 0
        points = np.asarray(result.witness['points'], dtype=float)
        thresholds = np.asarray(result.witness['thresholds'], dtype=float)
        params = np.asarray(result.witness['params'], dtype=float)
        d = len(points)
        if len(params) != 2 ** d:
            raise WitnessMismatch(f"expected {2 ** d} parameter vectors, got {len(params)}")
        values = fam.evaluate(points, params)
        gamma = result.witness.get('gamma')
        for pattern in range(2 ** d):
            for i in range(d):
                above = bool((pattern >> (d - 1 - i)) & 1)
                v, r = values[i, pattern], thresholds[i]
                if gamma is None:
                    ok = (v > r) if above else (v <= r)
                else:
                    ok = (v >= r + gamma) if above else (v <= r - gamma)
                if not ok:
                    raise WitnessMismatch(f"pattern {pattern:0{d}b} fails at point {i}")
        return d
    if result.kind == 'components':
        theta = np.asarray(result.witness['theta'], dtype=float)
        return sign_components_1d(fam, theta, result.witness['resolution']).value
    raise WitnessMismatch(f"cannot replay results of kind {result.kind!r}")


# Components and roots

def _count_runs(mask: np.ndarray) -> np.ndarray:
    """Maximal runs of True along axis 0."""
    mask = np.asarray(mask, dtype=bool)
    starts = mask[1:] & ~mask[:-1]
    return mask[0].astype(int) + starts.sum(axis=0)


def sign_components_1d(fam: ParametricFamily, theta: Sequence[float], resolution: int) -> ProbeResult:
    """Runs of grid points with f <= 0: a lower bound on the sublevel components."""
    if fam.input_dim != 1:
        raise LabError(f"sign_components_1d needs a one-dimensional input, got n={fam.input_dim}")
    lo, hi = fam.input_ranges[0]
    xs = np.linspace(lo, hi, resolution).reshape(-1, 1)
    theta = np.asarray(theta, dtype=float).reshape(1, -1)
    values = fam.evaluate(xs, theta)[:, 0]
    count = int(_count_runs(values <= 0))
    return ProbeResult(
        kind='components', value=count, instance=fam.describe(),
        witness={'theta': theta[0].tolist(), 'resolution': resolution},
    )


def max_sign_components(fam: ParametricFamily, resolution: Optional[int] = None) -> ProbeResult:
    """Maximum sublevel run count over the whole parameter grid."""
    if fam.input_dim != 1:
        raise LabError("max_sign_components needs a one-dimensional input")
    resolution = resolution or len(fam.input_grid)
    lo, hi = fam.input_ranges[0]
    xs = np.linspace(lo, hi, resolution).reshape(-1, 1)
    counts = _count_runs(fam.evaluate(xs, fam.param_grid) <= 0)
    best = int(np.argmax(counts))
    return ProbeResult(
        kind='components', value=int(counts[best]), instance=fam.describe(),
        witness={'theta': fam.param_grid[best].tolist(), 'resolution': resolution},
    )


def _to_rational(c: Any) -> sympy.Rational:
    if isinstance(c, Fraction):
        return sympy.Rational(c.numerator, c.denominator)
    if isinstance(c, float):
        return sympy.Rational(str(c))
    return sympy.Rational(c)


def poly_roots_count(coeffs: Sequence[Any]) -> int:
    """
    Distinct real roots via a Sturm sequence.

    Args:
        coeffs: coefficients from the highest degree down, exact rationals
            (ints, Fractions, or floats converted through their decimal text).

    Raises:
        ZeroPolynomial: every coefficient is zero.
    """
    x = sympy.Symbol('x')
    rational = [_to_rational(c) for c in coeffs]
    if not rational or all(c == 0 for c in rational):
        raise ZeroPolynomial("the zero polynomial has infinitely many roots")
    poly = sympy.Poly(rational, x, domain='QQ')
    if poly.degree() < 1:
        return 0
    sequence = sympy.sturm(poly)

    def variations(at_plus_infinity: bool) -> int:
        signs = []
        for p in sequence:
            if p.is_zero:
                continue
            lead = sympy.sign(p.LC())
            if not at_plus_infinity and p.degree() % 2 == 1:
                lead = -lead
            signs.append(int(lead))
        return sum(1 for a, b in zip(signs, signs[1:]) if a * b < 0)

    return variations(False) - variations(True)


def exp_linear_roots(a: float, b: float, c: float, lo: float = -5.0, hi: float = 5.0) -> int:
    """
    Roots of a + b x + c e^x on [lo, hi].

    The derivative b + c e^x vanishes at most once, at ln(-b/c); on each
    monotone piece a sign change marks exactly one root.
    """
    def f(x: float) -> float:
        return a + b * x + c * math.exp(x)

    if a == 0 and b == 0 and c == 0:
        raise ZeroPolynomial("a + b x + c e^x vanishes identically")
    cuts = [lo, hi]
    if c != 0 and -b / c > 0:
        critical = math.log(-b / c)
        if lo < critical < hi:
            cuts = [lo, critical, hi]
    roots = set()
    for left, right in zip(cuts, cuts[1:]):
        f_left, f_right = f(left), f(right)
        if f_left == 0:
            roots.add(left)
        if f_right == 0:
            roots.add(right)
        if f_left * f_right < 0:
            roots.add(('interior', left, right))
    return len(roots)
