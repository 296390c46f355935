"""
table1 - two-fold coincidence table of the optical P-SWAP.
"""

from pathlib import Path
from typing import Optional

import typer

from ..schemas import OutputFormat, RunConfig
from ..service import VerificationService
from .common import finish, render_table, usage_errors


def table1(
    scheme: str = typer.Option("pswap", "--scheme", help="Only pswap has a coincidence table."),
    format: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
    out: Optional[Path] = typer.Option(None, "--out"),
    timing: bool = typer.Option(False, "--timing"),
    record: bool = typer.Option(False, "--record"),
):
    """
    Coincidence expectations for the six logical basis inputs, before and after feed-forward.
    """
    with usage_errors():
        config = RunConfig(command="table1", scheme=scheme, format=format, out=out, timing=timing, record=record)
        table, report = VerificationService().table1(config)
    finish(report, config, body=render_table(table, config.format))
