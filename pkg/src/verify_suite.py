"""
Verification harness: runs every oracle-vs-bound pair of a suite and reports
violations (oracle above its symbolic bound).
"""

import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .bound_engine import component_bound_B, khovanskii_count, km_vc_bound, pnn_pdim_bound
from .empirical_lab import (
    DEFAULT_BUDGET,
    ProbeResult,
    build_family,
    exp_linear_roots,
    fat_lower_bound,
    max_sign_components,
    pdim_lower_bound,
    poly_roots_count,
    replay_witness,
    sign_components_1d,
    vc_lower_bound,
)
from .spec_documents import SPEC_VERSION, error_location
from .sweep_runner import SweepRunner

logger = logging.getLogger(__name__)

CheckKind = Literal['pdim', 'vc', 'fat', 'poly_roots', 'exp_linear_roots', 'exp_linear_components',
                    'components_law']


class SuiteError(ValueError):
    pass


class SuiteInstance(BaseModel):
    model_config = ConfigDict(extra='forbid')

    name: str
    check: CheckKind
    family: Optional[str] = None
    family_options: Dict[str, Any] = Field(default_factory=dict)
    max_d: int = Field(default=6, ge=1, le=12)
    gamma: float = Field(default=0.05, gt=0)
    samples: int = Field(default=200, ge=1)
    degree: int = Field(default=6, ge=1)
    window: Tuple[float, float] = (-5.0, 5.0)
    resolution: int = Field(default=401, ge=2)
    # fault injection: replaces the symbolic bound
    bound_override: Optional[int] = None


class SuiteDoc(BaseModel):
    model_config = ConfigDict(extra='forbid')

    version: str = SPEC_VERSION
    instances: List[SuiteInstance] = Field(default_factory=list)


class CheckResult(BaseModel):
    name: str
    check: str
    oracle: int
    bound: int
    passed: bool
    detail: str
    witness: Dict[str, Any] = Field(default_factory=dict)


class ViolationRecord(BaseModel):
    name: str
    category: str
    severity: str
    message: str
    suggested_action: str


class VerifySummary(BaseModel):
    tool_version: str
    seed: int
    instances: int
    passed: bool
    checks: List[CheckResult]
    violations: List[ViolationRecord]
    category_summary: Dict[str, int]
    warnings: List[str] = Field(default_factory=list)


DEFAULT_SUITE: List[Dict[str, Any]] = [
    {'name': 'affine_pdim', 'check': 'pdim', 'family': 'affine_1d', 'max_d': 6},
    {'name': 'affine_vc', 'check': 'vc', 'family': 'affine_1d', 'max_d': 6},
    {'name': 'sigmoid_neuron_pdim', 'check': 'pdim', 'family': 'sigmoid_neuron', 'max_d': 6},
    {'name': 'sigmoid_neuron_vc', 'check': 'vc', 'family': 'sigmoid_neuron', 'max_d': 6},
    {'name': 'sigmoid_neuron_fat', 'check': 'fat', 'family': 'sigmoid_neuron', 'max_d': 6, 'gamma': 0.05},
    {'name': 'two_layer_sigmoid_pdim', 'check': 'pdim', 'family': 'two_layer_sigmoid', 'max_d': 6},
    {'name': 'polynomial_roots', 'check': 'poly_roots', 'degree': 6, 'samples': 200},
    {'name': 'exp_linear_roots', 'check': 'exp_linear_roots', 'samples': 500},
    {'name': 'exp_linear_components', 'check': 'exp_linear_components', 'family': 'exp_linear',
     'samples': 200},
    {'name': 'affine_components_law', 'check': 'components_law', 'family': 'affine_1d', 'max_d': 6},
    {'name': 'exp_linear_components_law', 'check': 'components_law', 'family': 'exp_linear', 'max_d': 6},
]


def default_suite() -> SuiteDoc:
    return SuiteDoc(instances=[SuiteInstance(**item) for item in DEFAULT_SUITE])


def load_suite(path: Union[str, Path]) -> SuiteDoc:
    """Read a suite document; OSError propagates for unreadable paths."""
    text = Path(path).read_text(encoding='utf-8')
    try:
        return SuiteDoc.model_validate_json(text)
    except ValidationError as exc:
        location, message = error_location(exc)
        raise SuiteError(f"{path}: {location}: {message}") from exc


class SuiteReporter:
    """Sorts violations into categories, each with its severity and a suggested action."""

    def __init__(self):
        self.categories = {
            'bound_domination': {
                'name': 'Bound domination',
                'checks': ('pdim', 'vc', 'fat'),
                'severity': 'critical',
                'action': 'Recheck the format propagated for this family and the parameter count',
            },
            'root_count': {
                'name': 'Root count',
                'checks': ('poly_roots', 'exp_linear_roots'),
                'severity': 'critical',
                'action': 'Recheck the Khovanskii count for this system',
            },
            'components': {
                'name': 'Sublevel components',
                'checks': ('exp_linear_components', 'components_law'),
                # grid-sampled counts on one side of the comparison
                'severity': 'warning',
                'action': 'Recheck the one-dimensional component law on a finer grid',
            },
        }

    def category_of(self, check: str) -> str:
        for key, category in self.categories.items():
            if check in category['checks']:
                return key
        return 'bound_domination'

    def analyze(self, results: List[CheckResult]) -> Tuple[List[ViolationRecord], Dict[str, int]]:
        violations = []
        summary = {key: 0 for key in self.categories}
        for result in results:
            if result.passed:
                continue
            category = self.category_of(result.check)
            summary[category] += 1
            violations.append(ViolationRecord(
                name=result.name,
                category=category,
                severity=self.categories[category]['severity'],
                message=f"oracle {result.oracle} exceeds bound {result.bound}: {result.detail}",
                suggested_action=self.categories[category]['action'],
            ))
        return violations, summary


def _random_polynomial(rng: np.random.Generator, degree: int) -> List[Fraction]:
    coeffs = [Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 10))) for _ in range(degree + 1)]
    if coeffs[0] == 0:
        coeffs[0] = Fraction(1)
    return coeffs


def _probe_witness(result: ProbeResult) -> Dict[str, Any]:
    return {'kind': result.kind, **result.witness}


def run_instance(instance: SuiteInstance, rng: np.random.Generator, budget: int = DEFAULT_BUDGET) -> CheckResult:
    """Evaluate one oracle and its symbolic bound."""
    check = instance.check
    witness: Dict[str, Any] = {}

    if check in ('pdim', 'vc', 'fat', 'components_law', 'exp_linear_components') and not instance.family:
        raise SuiteError(f"{instance.name}: check '{check}' needs a family")

    if check in ('pdim', 'vc', 'fat'):
        fam = build_family(instance.family, **instance.family_options)
        p, fmt = fam.param_dim, fam.fmt
        if check == 'pdim':
            probe = pdim_lower_bound(fam, instance.max_d, budget)
            bound = pnn_pdim_bound(fmt, p).pdim_bound
        elif check == 'fat':
            probe = fat_lower_bound(fam, instance.gamma, instance.max_d, budget)
            bound = pnn_pdim_bound(fmt, p).pdim_bound
        else:
            probe = vc_lower_bound(fam, instance.max_d, budget)
            bound = km_vc_bound(p, 1, component_bound_B(p, fmt.q, fmt.D, fmt.d))
        oracle = replay_witness(fam, probe)
        witness = _probe_witness(probe)
        detail = f"{probe.kind} on {fam.describe()}, format {fmt}"

    elif check == 'poly_roots':
        counts = [poly_roots_count(_random_polynomial(rng, instance.degree)) for _ in range(instance.samples)]
        oracle = max(counts)
        bound = khovanskii_count(1, 0, 0, [instance.degree])
        detail = f"max distinct real roots over {instance.samples} degree-{instance.degree} polynomials"

    elif check == 'exp_linear_roots':
        lo, hi = instance.window
        params = rng.uniform(-1.0, 1.0, size=(instance.samples, 3))
        counts = [exp_linear_roots(a, b, c, lo, hi) for a, b, c in params]
        best = int(np.argmax(counts))
        oracle = counts[best]
        bound = khovanskii_count(1, 1, 1, [1])
        witness = {'a': float(params[best, 0]), 'b': float(params[best, 1]), 'c': float(params[best, 2])}
        detail = f"max roots of a + b x + c e^x on {list(instance.window)} over {instance.samples} samples"

    elif check == 'exp_linear_components':
        fam = build_family(instance.family, **instance.family_options)
        thetas = rng.uniform(-1.0, 1.0, size=(instance.samples, fam.param_dim))
        probes = [sign_components_1d(fam, theta, instance.resolution) for theta in thetas]
        best = max(probes, key=lambda r: r.value)
        oracle = best.value
        bound = khovanskii_count(1, 1, 1, [1])
        witness = _probe_witness(best)
        detail = f"max sublevel components over {instance.samples} sampled parameters"

    elif check == 'components_law':
        fam = build_family(instance.family, **instance.family_options)
        vc = vc_lower_bound(fam, instance.max_d, budget)
        components = max_sign_components(fam, resolution=max(instance.resolution, len(fam.input_grid)))
        oracle = replay_witness(fam, vc)
        bound = 2 * components.value
        witness = {'vc': _probe_witness(vc), 'components': _probe_witness(components)}
        detail = f"vc lower bound against twice the max sublevel components ({components.value})"

    else:
        raise SuiteError(f"unknown check {check!r}")

    # fault injection
    if instance.bound_override is not None:
        detail += f" (bound overridden from {bound})"
        bound = instance.bound_override
    return CheckResult(name=instance.name, check=check, oracle=int(oracle), bound=int(bound),
                       passed=oracle <= bound, detail=detail, witness=witness)


def verify_suite(suite: Optional[SuiteDoc] = None, seed: int = 0, budget: int = DEFAULT_BUDGET,
                 workers: int = 1) -> VerifySummary:
    """Run every instance; results do not depend on the number of workers."""
    suite = suite if suite is not None else default_suite()
    warnings = []
    if not suite.instances:
        warnings.append('empty suite: nothing was verified')
        logger.warning('verify_suite called with no instances')

    def run(indexed: Tuple[int, SuiteInstance]) -> CheckResult:
        index, instance = indexed
        # the stream depends on (seed, index) only, never on scheduling
        rng = np.random.default_rng([seed, index])
        return run_instance(instance, rng, budget)

    results = SweepRunner(max_workers=workers).map(run, list(enumerate(suite.instances)), name='verify')
    violations, summary = SuiteReporter().analyze(results)
    for violation in violations:
        logger.warning("violation in %s: %s", violation.name, violation.message)
    return VerifySummary(
        tool_version=__version__, seed=seed, instances=len(suite.instances),
        passed=not violations, checks=results, violations=violations,
        category_summary=summary, warnings=warnings,
    )
