import io
import json
import logging
import math
import os
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from jinja2 import Template
from pydantic import ValidationError

from ..exceptions import SchemaError
from ..models import Alignment, CaseResult, PetriNet
from ..schemas import (
    AlignmentDocument,
    CaseErrorDocument,
    MoveDocument,
    ReportRow,
    StatsDocument,
)
from .evaluation_service import classify_moves, recover

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "epsilon",
    "t_d",
    "algorithm",
    "accuracy",
    "f1",
    "sensitivity",
    "specificity",
    "g_mean",
    "runtime_s",
]

BENCH_COLUMNS = [
    "log",
    "variant",
    "cases",
    "failed",
    "events_min",
    "events_max",
    "events_avg",
    "events_median",
    "model_places",
    "model_transitions",
    "product_transitions_avg",
    "expanded_avg",
    "time_total_s",
    "time_median_s",
]

BENCH_CASE_COLUMNS = [
    "log",
    "variant",
    "case_id",
    "events",
    "expanded",
    "generated",
    "product_transitions",
    "time_s",
    "error",
]

RECOVERY_COLUMNS = ["p_h", "epsilon", "probcost", "argmax"]

FITNESS_COLUMNS = ["sequence", "cases", "failed", "mean", "sd"]

GNUPLOT_TEMPLATE = Template(
    """set datafile separator ","
set terminal pngcairo size 900,600
set output "{{ output }}"
set key outside right
set xlabel "{{ x_column }}"
set ylabel "{{ y_column }}"
set yrange [0:1]
plot {% for algorithm in algorithms %}"{{ report }}" using (strcol({{ algorithm_index }}) eq "{{ algorithm }}" ? ${{ x_index }} : 1/0):{{ y_index }} with linespoints title "{{ algorithm }}"{% if not loop.last %}, \\
     {% endif %}{% endfor %}
"""
)


# Report CSV


def _format_cell(value) -> str:
    """Six decimals for numbers, empty for None or NaN."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, (float, int)) and not isinstance(value, bool):
        return f"{float(value):.6f}"
    return str(value)


def write_report_csv(reports: Sequence[ReportRow]) -> bytes:
    """Stable columns, six decimals, LF line endings."""
    frame = pd.DataFrame(
        [[_format_cell(getattr(r, c)) for c in REPORT_COLUMNS] for r in reports],
        columns=REPORT_COLUMNS,
    )
    return frame.to_csv(index=False, lineterminator="\n").encode("utf-8")


def read_report_csv(data: bytes) -> List[ReportRow]:
    """Parse a report CSV written by write_report_csv."""
    frame = pd.read_csv(io.BytesIO(data), dtype={"algorithm": str})
    missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"report is missing columns {missing}", line=1)
    frame = frame.astype(object).where(frame.notna(), None)
    try:
        return [ReportRow(**{c: row[c] for c in REPORT_COLUMNS}) for row in frame.to_dict("records")]
    except ValidationError as e:
        raise SchemaError(f"bad report row: {e.errors()[0]['msg']}")


def write_gnuplot_script(report_path: str, x_column: str, algorithms: Sequence[str], y_column: str = "g_mean") -> str:
    """Line chart of one metric per algorithm against `x_column`."""
    return GNUPLOT_TEMPLATE.render(
        report=report_path,
        output=os.path.splitext(report_path)[0] + f".{y_column}.png",
        x_column=x_column,
        y_column=y_column,
        algorithms=algorithms,
        algorithm_index=REPORT_COLUMNS.index("algorithm") + 1,
        x_index=REPORT_COLUMNS.index(x_column) + 1,
        y_index=REPORT_COLUMNS.index(y_column) + 1,
    )


# Alignment documents


def alignment_document(alignment: Alignment, timings: bool = False, fitness: Optional[float] = None) -> AlignmentDocument:
    """Serialisable form of an alignment with its recovered trace and predictions."""
    stats = alignment.stats
    return AlignmentDocument(
        case_id=alignment.case_id or "",
        cost_function=alignment.cost_function.variant.value,
        epsilon=alignment.cost_function.epsilon,
        moves=[
            MoveDocument(
                kind=m.kind.value,
                transition=m.transition,
                model_label=str(m.model_label) if m.model_label is not None else None,
                trace_label=m.log_label,
                event_index=m.event_index,
                weight=m.weight,
                cost=m.cost,
            )
            for m in alignment.moves
        ],
        total_cost=alignment.total_cost,
        stats=StatsDocument(
            expanded=stats.expanded,
            generated=stats.generated,
            queue_peak=stats.queue_peak,
            elapsed_s=stats.elapsed if timings else 0.0,
            product_places=stats.product_places,
            product_transitions=stats.product_transitions,
        ),
        recovered=list(recover(alignment).activities),
        predictions=classify_moves(alignment),
        fitness=fitness,
    )


def case_document(
    result: CaseResult, timings: bool = False, fitness: Optional[float] = None
) -> Union[AlignmentDocument, CaseErrorDocument]:
    """Alignment document, or an error document for a failed case."""
    if result.ok:
        return alignment_document(result.alignment, timings, fitness)
    error = result.error or {}
    return CaseErrorDocument(
        case_id=result.case_id,
        error=error.get("error", "error"),
        message=error.get("message", ""),
        details=error.get("details", {}),
    )


def write_alignment_documents(documents: Sequence[Union[AlignmentDocument, CaseErrorDocument]]) -> bytes:
    """Pretty-printed {"cases": [...]} payload."""
    payload = {"cases": [d.model_dump(mode="json") for d in documents]}
    return (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def read_alignment_document(data: bytes) -> List[Union[AlignmentDocument, CaseErrorDocument]]:
    """Parse a .align.json file; malformed input raises SchemaError."""
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as e:
        raise SchemaError(f"malformed JSON: {e.msg}", line=e.lineno)
    documents = []
    try:
        for case in payload["cases"]:
            model = CaseErrorDocument if "error" in case else AlignmentDocument
            documents.append(model.model_validate(case))
    except (KeyError, TypeError) as e:
        raise SchemaError(f"alignment document lacks {e}")
    except ValidationError as e:
        raise SchemaError(f"bad alignment document: {e.errors()[0]['msg']}")
    return documents


# Benchmark table


def bench_row(log_name: str, variant: str, model: PetriNet, event_counts: Sequence[int], results: Sequence[CaseResult], timings: bool) -> Dict:
    """Summary of one log under one cost variant."""
    done = [r.alignment for r in results if r.ok]
    counts = np.asarray(event_counts, dtype=float)
    elapsed = np.asarray([a.stats.elapsed for a in done], dtype=float)
    return {
        "log": log_name,
        "variant": variant,
        "cases": len(results),
        "failed": len(results) - len(done),
        "events_min": int(counts.min()) if counts.size else 0,
        "events_max": int(counts.max()) if counts.size else 0,
        "events_avg": float(counts.mean()) if counts.size else 0.0,
        "events_median": float(np.median(counts)) if counts.size else 0.0,
        "model_places": len(model.places),
        "model_transitions": len(model.transitions),
        "product_transitions_avg": float(np.mean([a.stats.product_transitions for a in done])) if done else 0.0,
        "expanded_avg": float(np.mean([a.stats.expanded for a in done])) if done else 0.0,
        "time_total_s": float(elapsed.sum()) if timings and elapsed.size else 0.0,
        "time_median_s": float(np.median(elapsed)) if timings and elapsed.size else 0.0,
    }


def write_table_csv(rows: Sequence[Dict], columns: Sequence[str]) -> bytes:
    """Generic CSV in the given column order."""
    frame = pd.DataFrame(list(rows), columns=list(columns))
    return frame.to_csv(index=False, float_format="%.6f", lineterminator="\n").encode("utf-8")


class ReportService:
    """Writes every result file of a run under one output directory."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(self.out_dir, exist_ok=True)

    def _write(self, name: str, data: Union[bytes, str]) -> str:
        path = os.path.join(self.out_dir, name)
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "wb") as handle:
                handle.write(data.encode("utf-8") if isinstance(data, str) else data)
        except OSError as e:
            logger.error(f"Error writing {path}: {e}")
            raise
        logger.info(f"Wrote {path}")
        return path

    def save_report(self, name: str, rows: Sequence[ReportRow], plot_x: Optional[str] = None) -> str:
        """Write <name>.report.csv and, with plot_x, a gnuplot script next to it."""
        path = self._write(f"{name}.report.csv", write_report_csv(rows))
        if plot_x is not None:
            algorithms = list(dict.fromkeys(r.algorithm for r in rows))
            self._write(f"{name}.gnuplot", write_gnuplot_script(os.path.basename(path), plot_x, algorithms))
        return path

    def save_alignments(self, name: str, documents: Sequence[Union[AlignmentDocument, CaseErrorDocument]]) -> str:
        return self._write(f"{name}.align.json", write_alignment_documents(documents))

    def save_table(self, filename: str, rows: Sequence[Dict], columns: Sequence[str]) -> str:
        """Write rows as CSV under the output directory"""
        return self._write(filename, write_table_csv(rows, columns))

    def save_bytes(self, name: str, data: Union[bytes, str]) -> str:
        return self._write(name, data)
