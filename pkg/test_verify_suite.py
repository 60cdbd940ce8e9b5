import json
from pathlib import Path

import numpy as np
import pytest

from src.verify_suite import (
    CheckResult,
    SuiteDoc,
    SuiteError,
    SuiteInstance,
    SuiteReporter,
    default_suite,
    load_suite,
    run_instance,
    verify_suite,
)

SUITES = Path(__file__).parent / 'suites'


class TestSuites:
    def test_quick_suite_passes(self):
        summary = verify_suite(load_suite(SUITES / 'quick.json'), seed=0)
        assert summary.passed
        assert summary.instances == 4
        assert all(c.oracle <= c.bound for c in summary.checks)
        assert not summary.warnings

    def test_fault_injection_is_reported(self):
        summary = verify_suite(load_suite(SUITES / 'fault_injected.json'), seed=0)
        assert not summary.passed
        assert [v.name for v in summary.violations] == ['affine_pdim_forced_low']
        violation = summary.violations[0]
        assert violation.category == 'bound_domination'
        assert violation.severity == 'critical'
        assert summary.category_summary['bound_domination'] == 1
        assert 'overridden' in summary.checks[1].detail

    def test_empty_suite_warns(self):
        summary = verify_suite(SuiteDoc(), seed=0)
        assert summary.passed
        assert summary.instances == 0
        assert summary.warnings == ['empty suite: nothing was verified']

    def test_default_suite_passes(self):
        summary = verify_suite(default_suite(), seed=0)
        assert summary.passed, [v.message for v in summary.violations]
        by_name = {c.name: c for c in summary.checks}
        assert by_name['affine_pdim'].oracle == 2
        assert by_name['affine_vc'].oracle == 2
        assert by_name['exp_linear_roots'].bound == 2
        assert by_name['polynomial_roots'].bound == 6
        # sigmoid values are positive: the classifiers threshold at one half
        assert by_name['sigmoid_neuron_vc'].oracle >= 2

    def test_summary_independent_of_workers(self):
        suite = load_suite(SUITES / 'quick.json')
        serial = verify_suite(suite, seed=3, workers=1)
        parallel = verify_suite(suite, seed=3, workers=4)
        assert serial.model_dump() == parallel.model_dump()

    def test_seed_changes_only_sampled_checks(self):
        suite = load_suite(SUITES / 'quick.json')
        first = {c.name: c for c in verify_suite(suite, seed=1).checks}
        second = {c.name: c for c in verify_suite(suite, seed=2).checks}
        assert first['affine_pdim'] == second['affine_pdim']


class TestRunInstance:
    def test_family_required(self):
        with pytest.raises(SuiteError):
            run_instance(SuiteInstance(name='x', check='pdim'), np.random.default_rng(0))

    def test_witness_is_kept(self):
        result = run_instance(SuiteInstance(name='x', check='vc', family='affine_1d', max_d=3),
                              np.random.default_rng(0))
        assert result.witness['kind'] == 'vc_lb'
        assert len(result.witness['points']) == result.oracle

    def test_components_law(self):
        result = run_instance(SuiteInstance(name='law', check='components_law', family='affine_1d', max_d=3),
                              np.random.default_rng(0))
        assert result.passed
        assert result.bound == 2

    def test_sigmoid_vc_thresholds_at_one_half(self):
        result = run_instance(SuiteInstance(name='s', check='vc', family='sigmoid_neuron', max_d=3),
                              np.random.default_rng(0))
        assert result.oracle == 2
        assert result.witness['thresholds'] == [0.5, 0.5]


class TestLoading:
    def test_validation_error_location(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps({'instances': [{'name': 'x', 'check': 'pdim', 'max_d': 40}]}))
        with pytest.raises(SuiteError) as info:
            load_suite(path)
        assert 'instances[0].max_d' in str(info.value)

    def test_unknown_check(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps({'instances': [{'name': 'x', 'check': 'telepathy'}]}))
        with pytest.raises(SuiteError):
            load_suite(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_suite(tmp_path / 'absent.json')


class TestReporter:
    def test_categories(self):
        reporter = SuiteReporter()
        assert reporter.category_of('poly_roots') == 'root_count'
        assert reporter.category_of('components_law') == 'components'
        assert reporter.category_of('fat') == 'bound_domination'

    @pytest.mark.parametrize('check, category, severity', [
        ('pdim', 'bound_domination', 'critical'),
        ('exp_linear_roots', 'root_count', 'critical'),
        ('components_law', 'components', 'warning'),
    ])
    def test_severity_follows_category(self, check, category, severity):
        failed = CheckResult(name='x', check=check, oracle=5, bound=2, passed=False, detail='')
        passed = CheckResult(name='y', check=check, oracle=1, bound=2, passed=True, detail='')
        violations, summary = SuiteReporter().analyze([failed, passed])
        assert [(v.category, v.severity) for v in violations] == [(category, severity)]
        assert summary[category] == 1
        assert 'oracle 5 exceeds bound 2' in violations[0].message
