# Exportación a Excel y tablas legibles del catálogo y de los reportes

import io
from typing import Any, Dict, List, Optional

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter

from . import __version__
from .gate_catalog import GateCatalog, GateSpec, default_catalog, loss_lookup, loss_names
from .spec_documents import CatalogDoc, CatalogRecord
from .tame_analyzer import AnalysisReport
from .utils import format_big_int, format_triple

# Estilos reutilizables
HEADER_FONT = Font(bold=True, color="FFFFFF")
HEADER_FILL = PatternFill(start_color="4F81BD", end_color="4F81BD", fill_type="solid")
CENTER_ALIGN = Alignment(horizontal='center', vertical='center', wrap_text=True)
BORDER_THIN = Border(left=Side(style='thin'), right=Side(style='thin'),
                     top=Side(style='thin'), bottom=Side(style='thin'))
MAX_COLUMN_WIDTH = 60


def _record(spec: GateSpec, description: str) -> CatalogRecord:
    return CatalogRecord(
        name=spec.name,
        description=description,
        definability=spec.definability.value,
        format=spec.format.as_tuple() if spec.format else None,
        split_format=spec.split_format.as_tuple() if spec.split_format else None,
        smooth=spec.smooth,
        param_count=spec.param_count,
        caveats=list(spec.notes) + list(spec.obligations),
    )


def catalog_document(catalog: Optional[GateCatalog] = None) -> CatalogDoc:
    """Todas las compuertas con sus hiperparámetros de ejemplo, más las pérdidas."""
    catalog = catalog or default_catalog()
    gates = [_record(catalog.example(name), catalog.describe(name)) for name in catalog.names()]
    losses = [_record(loss_lookup(name), 'loss') for name in loss_names()]
    return CatalogDoc(tool_version=__version__, gates=gates, losses=losses)


def _triple_text(triple) -> str:
    return '-' if triple is None else '({},{},{})'.format(*triple)


def catalog_frame(records: List[CatalogRecord]) -> pd.DataFrame:
    rows = []
    for record in records:
        rows.append({
            'Gate': record.name,
            'Class': record.definability,
            'Format': _triple_text(record.format),
            'Split format': _triple_text(record.split_format),
            'Smooth': 'yes' if record.smooth else 'no',
            'Params': record.param_count,
            'Caveats': '; '.join(record.caveats),
        })
    return pd.DataFrame(rows, columns=['Gate', 'Class', 'Format', 'Split format', 'Smooth', 'Params', 'Caveats'])


def formats_frame(report: AnalysisReport) -> pd.DataFrame:
    rows = [{'Node': node_id, 'q': fmt.q, 'D': fmt.D, 'd': fmt.d}
            for node_id, fmt in report.per_node_formats.items()]
    if report.net_format is not None:
        f = report.net_format
        rows.append({'Node': 'net', 'q': f.q, 'D': f.D, 'd': f.d})
    return pd.DataFrame(rows, columns=['Node', 'q', 'D', 'd'])


def summary_rows(report: AnalysisReport) -> List[List[Any]]:
    rows = [
        ['Structure', report.structure.value],
        ['Definable', report.definable],
        ['Finite sample complexity', report.finite_sample_complexity],
        ['Complexity constant', report.complexity_constant],
        ['Mode', report.mode],
        ['Parameters', report.param_count],
        ['Net format', format_triple(report.net_format)],
    ]
    if report.loss:
        rows.append(['Loss', report.loss])
    if report.blocked_at:
        rows.append(['Blocked at', report.blocked_at])
    if report.bounds is not None:
        rows.append(['ceil log2 B', report.bounds.B_log2_ceil])
        rows.append(['Pseudo-dimension bound', format_big_int(report.bounds.pdim_bound)])
    for plan in report.plans:
        rows.append([f'N ({plan.mode})', format_big_int(plan.N)])
    return rows


def _style_header(ws):
    for cell in ws[1]:
        cell.font = HEADER_FONT
        cell.fill = HEADER_FILL
        cell.alignment = CENTER_ALIGN
        cell.border = BORDER_THIN


def _autosize(ws):
    for index, column in enumerate(ws.columns, start=1):
        width = max((len(str(cell.value)) for cell in column if cell.value is not None), default=8)
        ws.column_dimensions[get_column_letter(index)].width = min(width + 2, MAX_COLUMN_WIDTH)


def _write_table(wb: Workbook, title: str, header: List[str], rows: List[List[Any]]):
    ws = wb.create_sheet(title=title)
    ws.append(header)
    _style_header(ws)
    for row in rows:
        # las cotas grandes van como texto: Excel no guarda enteros de más de 15 dígitos
        ws.append([str(v) if isinstance(v, int) and not isinstance(v, bool) and abs(v) >= 10 ** 15 else v
                   for v in row])
        for cell in ws[ws.max_row]:
            cell.border = BORDER_THIN
    _autosize(ws)
    return ws


def _frame_sheet(wb: Workbook, title: str, frame: pd.DataFrame):
    return _write_table(wb, title, list(frame.columns), frame.values.tolist())


def catalog_workbook(doc: CatalogDoc) -> io.BytesIO:
    """Catálogo en .xlsx: una hoja para compuertas y otra para pérdidas."""
    output = io.BytesIO()
    wb = Workbook()
    wb.remove(wb.active)
    _frame_sheet(wb, 'GATES', catalog_frame(doc.gates))
    _frame_sheet(wb, 'LOSSES', catalog_frame(doc.losses))
    wb.save(output)
    output.seek(0)
    return output


def report_workbook(report: AnalysisReport, extra: Optional[Dict[str, Any]] = None) -> io.BytesIO:
    """Reporte de análisis en .xlsx: resumen, formatos, planes y advertencias."""
    output = io.BytesIO()
    wb = Workbook()
    wb.remove(wb.active)
    summary = summary_rows(report) + [[key, value] for key, value in (extra or {}).items()]
    _write_table(wb, 'SUMMARY', ['Field', 'Value'], summary)
    _frame_sheet(wb, 'FORMATS', formats_frame(report))
    _write_table(wb, 'PLANS', ['Mode', 'epsilon', 'delta', 'C', 'K', 'N', 'Formula'],
                 [[p.mode, p.epsilon, p.delta, p.C, p.K_or_pdim, p.N, p.formula] for p in report.plans])
    notes = ([['caveat', c] for c in report.caveats] + [['obligation', o] for o in report.obligations]
             + [['provenance', p] for p in report.provenance])
    _write_table(wb, 'NOTES', ['Kind', 'Text'], notes)
    wb.save(output)
    output.seek(0)
    return output
