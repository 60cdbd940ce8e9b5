"""
tamecheck command line.

Exit codes:
    0  success
    1  verification violation
    2  validation diagnostics (parse errors, invalid graphs)
    64 usage errors (bad flags, out-of-range values, bad environment)
    66 input file missing or unreadable
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel

from . import __version__
from .arch_graph import GraphError, InvalidGraph, ParseError, parse_spec
from .bound_engine import BoundError, SamplePlan, plan
from .config import ConfigError, Settings, load_settings
from .empirical_lab import LabError
from .gate_catalog import CatalogError
from .report_workbook import (
    catalog_document,
    catalog_frame,
    catalog_workbook,
    formats_frame,
    report_workbook,
    summary_rows,
)
from .spec_documents import ArchSpecDoc, CatalogDoc
from .tame_analyzer import AnalysisReport, analyze
from .utils import setup_logging, sha256_bytes
from .verify_suite import SuiteDoc, SuiteError, VerifySummary, default_suite, load_suite, verify_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_DIAGNOSTICS = 2
EXIT_USAGE = 64
EXIT_NO_INPUT = 66

SCHEMAS = {
    'arch': ArchSpecDoc,
    'report': AnalysisReport,
    'plan': SamplePlan,
    'catalog': CatalogDoc,
    'suite': SuiteDoc,
    'verify': VerifySummary,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; usage errors here exit with 64."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--format', choices=('human', 'machine'), default='human',
                        help='human tables or a JSON document')
    common.add_argument('--output', help='write to this path instead of stdout (.xlsx for a workbook)')

    planning = argparse.ArgumentParser(add_help=False)
    planning.add_argument('--epsilon', type=float, help='target accuracy in (0, 1]')
    planning.add_argument('--delta', type=float, help='failure probability in (0, 1]')
    planning.add_argument('--constant-C', dest='constant_C', type=float,
                          help='universal constant of the planners (default TAMECHECK_CONSTANT_C)')

    parser = _Parser(prog='tamecheck', description='Static tameness and sample-complexity analyzer')
    parser.add_argument('--version', action='version', version=f'tamecheck {__version__}')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    p_analyze = sub.add_parser('analyze', parents=[common, planning], help='analyze an architecture spec')
    p_analyze.add_argument('--input', required=True, help='architecture spec (JSON)')
    p_analyze.add_argument('--mode', choices=('classification', 'regression'),
                           help='planner; both when omitted')
    p_analyze.add_argument('--joint', action='store_true', help='formats jointly in inputs and parameters')
    p_analyze.add_argument('--loss', help='compose the readout with this loss')

    p_plan = sub.add_parser('plan', parents=[common, planning], help='sample size from a dimension bound')
    p_plan.add_argument('--K', dest='K', type=int, required=True, help='VC or pseudo-dimension bound')
    p_plan.add_argument('--mode', choices=('classification', 'regression'), default='classification')

    sub.add_parser('catalog', parents=[common], help='list the gate catalog')

    p_verify = sub.add_parser('verify', parents=[common], help='run the verification suite')
    p_verify.add_argument('--input', help='suite document (JSON); the embedded suite when omitted')
    p_verify.add_argument('--seed', type=int, help='default TAMECHECK_SEED')
    p_verify.add_argument('--max-shatter-d', dest='max_shatter_d', type=int,
                          help='cap on every instance max_d (default TAMECHECK_MAX_SHATTER_D)')
    p_verify.add_argument('--budget', type=int, help='pattern-check budget per probe')
    p_verify.add_argument('--workers', type=int, help='worker threads (default TAMECHECK_WORKERS)')

    p_schema = sub.add_parser('schema', parents=[common], help='print the JSON schema of a document')
    p_schema.add_argument('document', choices=sorted(SCHEMAS))
    return parser


# Output

def _dump(model: BaseModel) -> Any:
    return model.model_dump(mode='json')


def envelope(command: str, result: Any, input_bytes: Optional[bytes] = None) -> str:
    """Machine document: deterministic JSON, no timestamps."""
    doc = {
        'tool_version': __version__,
        'command': command,
        'input_sha256': sha256_bytes(input_bytes) if input_bytes is not None else None,
        'result': result,
    }
    return json.dumps(doc, indent=2) + '\n'


def _emit(text: str, output: Optional[str]):
    if output:
        Path(output).write_text(text, encoding='utf-8')
    else:
        sys.stdout.write(text)


def _wants_workbook(output: Optional[str]) -> bool:
    return bool(output) and output.lower().endswith('.xlsx')


def _read_input(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _check_positive(name: str, value: Optional[int]):
    if value is not None and value < 1:
        raise UsageError(f"{name} must be >= 1, got {value}")


# Commands

def _report_diagnostics(args, raw: bytes, diagnostics: List[Dict[str, Any]]) -> int:
    if args.format == 'machine':
        _emit(envelope('analyze', {'diagnostics': diagnostics}, raw), args.output)
    return EXIT_DIAGNOSTICS


def cmd_analyze(args, settings: Settings) -> int:
    raw = _read_input(args.input)
    C = args.constant_C if args.constant_C is not None else settings.constant_c
    if (args.epsilon is None) != (args.delta is None):
        raise UsageError('--epsilon and --delta go together')
    try:
        graph = parse_spec(raw)
    except InvalidGraph as exc:
        for diagnostic in exc.diagnostics:
            print(f"{args.input}: {diagnostic}", file=sys.stderr)
        return _report_diagnostics(args, raw, [d.to_dict() for d in exc.diagnostics])
    except ParseError as exc:
        print(f"{args.input}: {exc.location}: {exc.detail}", file=sys.stderr)
        return _report_diagnostics(args, raw, [{
            'kind': 'ParseError', 'node': None, 'location': exc.location,
            'message': exc.detail, 'severity': 'error',
        }])
    except GraphError as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        return _report_diagnostics(args, raw, [{
            'kind': type(exc).__name__, 'node': None, 'message': str(exc), 'severity': 'error',
        }])

    report = analyze(graph, mode='joint' if args.joint else 'parameters', loss=args.loss,
                     epsilon=args.epsilon, delta=args.delta, C=C, plan_mode=args.mode)

    if _wants_workbook(args.output):
        Path(args.output).write_bytes(report_workbook(report, {'input_sha256': sha256_bytes(raw)}).getvalue())
    elif args.format == 'machine':
        _emit(envelope('analyze', _dump(report), raw), args.output)
    else:
        _emit(render_report(report, args.input), args.output)
    return EXIT_OK


def render_report(report: AnalysisReport, source: str = '') -> str:
    lines = [f"Analysis of {source}" if source else 'Analysis', '']
    width = max(len(str(k)) for k, _ in summary_rows(report))
    for key, value in summary_rows(report):
        lines.append(f"  {str(key).ljust(width)}  {value}")
    if report.per_node_formats:
        lines += ['', 'Formats:', formats_frame(report).to_string(index=False)]
    for p in report.plans:
        lines += ['', f"Plan ({p.mode}): N = {p.N}", f"  {p.formula}"]
    for title, items in (('Caveats', report.caveats), ('Obligations', report.obligations)):
        if items:
            lines += ['', f"{title}:"] + [f"  - {item}" for item in items]
    return '\n'.join(lines) + '\n'


def cmd_plan(args, settings: Settings) -> int:
    if args.epsilon is None or args.delta is None:
        raise UsageError('plan needs --epsilon and --delta')
    C = args.constant_C if args.constant_C is not None else settings.constant_c
    result = plan(args.K, args.epsilon, args.delta, args.mode, C)
    if args.format == 'machine':
        _emit(envelope('plan', _dump(result)), args.output)
    else:
        text = f"N = {result.N}\n{result.formula}\n" + ''.join(f"note: {c}\n" for c in result.caveats)
        _emit(text, args.output)
    return EXIT_OK


def cmd_catalog(args, settings: Settings) -> int:
    doc = catalog_document()
    if _wants_workbook(args.output):
        Path(args.output).write_bytes(catalog_workbook(doc).getvalue())
    elif args.format == 'machine':
        _emit(envelope('catalog', _dump(doc)), args.output)
    else:
        with pd.option_context('display.max_colwidth', 80, 'display.width', 200):
            text = catalog_frame(list(doc.gates) + list(doc.losses)).to_string(index=False)
        _emit(text + '\n', args.output)
    return EXIT_OK


def _capped_suite(suite: SuiteDoc, max_d: int) -> SuiteDoc:
    instances = [inst.model_copy(update={'max_d': min(inst.max_d, max_d)}) for inst in suite.instances]
    return suite.model_copy(update={'instances': instances})


def render_summary(summary: VerifySummary) -> str:
    rows = [{'Check': c.name, 'Kind': c.check, 'Oracle': c.oracle, 'Bound': c.bound,
             'Result': 'ok' if c.passed else 'VIOLATION'} for c in summary.checks]
    lines = [f"Verification suite (seed {summary.seed}): {summary.instances} instance(s)"]
    if rows:
        lines.append(pd.DataFrame(rows).to_string(index=False))
    for violation in summary.violations:
        lines.append(f"VIOLATION {violation.name} [{violation.category}]: {violation.message}")
        lines.append(f"  -> {violation.suggested_action}")
    lines.extend(f"warning: {w}" for w in summary.warnings)
    lines.append('PASS' if summary.passed else f"FAIL: {len(summary.violations)} violation(s)")
    return '\n'.join(lines) + '\n'


def cmd_verify(args, settings: Settings) -> int:
    for name in ('max_shatter_d', 'budget', 'workers'):
        _check_positive(f"--{name.replace('_', '-')}", getattr(args, name))
    raw = None
    if args.input:
        raw = _read_input(args.input)
        suite = load_suite(args.input)
    else:
        suite = default_suite()
    seed = args.seed if args.seed is not None else settings.seed
    max_d = args.max_shatter_d or settings.max_shatter_d
    summary = verify_suite(
        _capped_suite(suite, max_d), seed=seed,
        budget=args.budget or settings.budget,
        workers=args.workers or settings.workers,
    )
    if args.format == 'machine':
        _emit(envelope('verify', _dump(summary), raw), args.output)
    else:
        _emit(render_summary(summary), args.output)
    return EXIT_OK if summary.passed else EXIT_VIOLATION


def cmd_schema(args, settings: Settings) -> int:
    schema = SCHEMAS[args.document].model_json_schema()
    _emit(json.dumps(schema, indent=2) + '\n', args.output)
    return EXIT_OK


COMMANDS = {
    'analyze': cmd_analyze,
    'plan': cmd_plan,
    'catalog': cmd_catalog,
    'verify': cmd_verify,
    'schema': cmd_schema,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        settings = load_settings()
    except ConfigError as exc:
        print(f"tamecheck: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    setup_logging(settings.log_level)

    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, settings)
    except FileNotFoundError as exc:
        print(f"tamecheck: {exc}", file=sys.stderr)
        return EXIT_NO_INPUT
    except SuiteError as exc:
        print(f"tamecheck: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except (UsageError, BoundError, CatalogError, LabError) as exc:
        print(f"tamecheck: {exc}", file=sys.stderr)
        return EXIT_USAGE
