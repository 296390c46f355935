"""
Helpers shared by the CLI commands: error translation, rendering and output.
"""

import csv
import io
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError

from ..database import get_db, init_db
from ..errors import DomainError
from ..schemas import CoincidenceTableSchema, OutputFormat, Report, RunConfig
from ..service import VerificationService, table_cell

logger = logging.getLogger(__name__)

session_scope = contextmanager(get_db)

EXIT_FAILED = 1
EXIT_IO = 3


@contextmanager
def usage_errors():
    """Turn bad options and out-of-domain arguments into usage errors (exit 2)."""
    try:
        yield
    except ValidationError as e:
        raise typer.BadParameter("; ".join(err["msg"] for err in e.errors())) from None
    except DomainError as e:
        raise typer.BadParameter(str(e)) from None


def emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        typer.echo(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
    except OSError as e:
        typer.echo(f"cannot write {out}: {e}", err=True)
        raise typer.Exit(EXIT_IO)
    logger.info("Wrote %s", out)


def record(report: Report) -> int:
    init_db()
    with session_scope() as db:
        return VerificationService(db).save_report(report)


def finish(report: Report, config: RunConfig, body: Optional[str] = None) -> None:
    """Record, print and set the exit code of a finished report."""
    if config.record:
        run_id = record(report)
        typer.echo(f"recorded run {run_id}", err=True)
    emit(body if body is not None else render_report(report, config.format), config.out)
    if not report.passed:
        raise typer.Exit(EXIT_FAILED)


# ==================== Rendering ====================

def _csv(rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    return buffer.getvalue().rstrip("\n")


def _fmt(value) -> str:
    return "" if value is None else f"{value:.12g}" if isinstance(value, float) else str(value)


def render_report(report: Report, fmt: OutputFormat) -> str:
    if fmt == OutputFormat.json:
        return report.model_dump_json(indent=2)
    if fmt == OutputFormat.csv:
        rows = [["name", "passed", "measured", "expected", "tolerance", "exact", "detail"]]
        for c in report.checks:
            rows.append([c.name, c.passed, _fmt(c.measured), _fmt(c.expected), _fmt(c.tolerance), _fmt(c.exact), _fmt(c.detail)])
        return _csv(rows)

    lines = [f"{report.command}: {report.status}"]
    for c in report.checks:
        mark = "PASS" if c.passed else "FAIL"
        line = f"  [{mark}] {c.name}"
        if c.measured is not None:
            line += f" measured={_fmt(c.measured)} expected={_fmt(c.expected)} tol={_fmt(c.tolerance)}"
        if c.exact:
            line += f" ({c.exact})"
        if c.detail:
            line += f" - {c.detail}"
        lines.append(line)
    if report.duration_seconds is not None:
        lines.append(f"  duration {report.duration_seconds:.3f}s")
    return "\n".join(lines)


def render_table(table: CoincidenceTableSchema, fmt: OutputFormat) -> str:
    if fmt == OutputFormat.json:
        return table.model_dump_json(indent=2)
    if fmt == OutputFormat.csv:
        rows = [["input", "view"] + table.columns]
        for name, signed, corrected in zip(table.inputs, table.signed, table.corrected):
            rows.append([name, "signed"] + [table_cell(v) for v in signed])
            rows.append([name, "corrected"] + [table_cell(v) for v in corrected])
        return _csv(rows)

    lines = []
    for name, signed, corrected in zip(table.inputs, table.signed, table.corrected):
        hits = [
            f"{column}={table_cell(c)}" + (" (sign flipped)" if s < 0 else "")
            for column, s, c in zip(table.columns, signed, corrected)
            if c != 0
        ]
        lines.append(f"{name}: " + ", ".join(hits))
    return "\n".join(lines)
