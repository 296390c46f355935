"""
verify - circuit-model checks of the qudit-assisted CNOT and Toffoli gates.
"""

from enum import Enum
from pathlib import Path
from typing import Optional

import typer

from ..schemas import OutputFormat, RunConfig
from ..service import VerificationService
from .common import finish, usage_errors

app = typer.Typer(help="Circuit-model verifications.", no_args_is_help=True)


class Gate(str, Enum):
    cnot = "cnot"
    toffoli = "toffoli"


@app.command("circuit")
def circuit(
    gate: Gate = typer.Option(..., "--gate", help="Gate to verify."),
    controls: int = typer.Option(2, "--controls", help="Control count for the Toffoli."),
    format: OutputFormat = typer.Option(OutputFormat.json, "--format"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the report here instead of stdout."),
    timing: bool = typer.Option(False, "--timing", help="Add wall-clock duration to the report."),
    record: bool = typer.Option(False, "--record", help="Store the report in the run ledger."),
):
    """
    Oracle equivalence, truth table, leakage and gate counts.
    """
    with usage_errors():
        config = RunConfig(
            command="verify",
            gate=gate.value,
            controls=controls if gate == Gate.toffoli else None,
            format=format,
            out=out,
            timing=timing,
            record=record,
        )
        report = VerificationService().run(config)
    finish(report, config)
