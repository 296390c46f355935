"""
runs - list reports stored with --record.
"""

import json
from typing import Optional

import typer

from ..database import init_db
from ..schemas import OutputFormat
from ..service import VerificationService
from .common import emit, session_scope


def runs(
    limit: int = typer.Option(20, "--limit", min=1),
    command: Optional[str] = typer.Option(None, "--command", help="Only runs of this command."),
    show: Optional[int] = typer.Option(None, "--show", help="Print the stored report of one run."),
    format: OutputFormat = typer.Option(OutputFormat.text, "--format"),
):
    init_db()
    with session_scope() as db:
        service = VerificationService(db)
        if show is not None:
            report = service.get_run(show)
            if report is None:
                raise typer.BadParameter(f"no recorded run {show}")
            emit(report.model_dump_json(indent=2), None)
            return
        rows = service.list_runs(limit=limit, command=command)

    if format == OutputFormat.json:
        emit(json.dumps([r.model_dump(mode="json") for r in rows], indent=2), None)
        return
    if not rows:
        emit("no recorded runs", None)
        return
    emit("\n".join(f"{r.id:>5}  {r.created_at}  {r.command:<8} {r.status}  {json.dumps(r.arguments, sort_keys=True)}" for r in rows), None)
