"""
cost - qubit-qudit and single-qudit gate counts of an m-qubit Toffoli.
"""

from pathlib import Path
from typing import Optional

import typer

from ..schemas import OutputFormat, RunConfig
from ..service import VerificationService
from .common import finish, usage_errors


def cost(
    qubits: int = typer.Option(..., "--qubits", "-m", help="Total qubits m of the Toffoli (controls plus target)."),
    format: OutputFormat = typer.Option(OutputFormat.json, "--format"),
    out: Optional[Path] = typer.Option(None, "--out"),
    timing: bool = typer.Option(False, "--timing"),
    record: bool = typer.Option(False, "--record"),
):
    """
    Prints (2m-3, 2m-4) and cross-checks small m against the circuit builder.
    """
    with usage_errors():
        config = RunConfig(command="cost", qubits=qubits, format=format, out=out, timing=timing, record=record)
        report = VerificationService().run(config)
    finish(report, config)
