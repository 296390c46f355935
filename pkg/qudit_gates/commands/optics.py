"""
optics - run logical inputs through a linear-optical scheme.
"""

from enum import Enum
from pathlib import Path
from typing import Optional

import typer

from ..schemas import OutputFormat, RunConfig
from ..service import VerificationService
from .common import finish, usage_errors


class SchemeName(str, Enum):
    pswap = "pswap"
    cnot = "cnot"
    toffoli = "toffoli"


def optics(
    scheme: SchemeName = typer.Option(..., "--scheme", help="Optical scheme to simulate."),
    input: Optional[str] = typer.Option(
        None, "--input", help="Basis label such as 10, or 'random'. Every basis input when omitted."
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed of the PCG64 generator for --input random."),
    feed_forward: bool = typer.Option(True, "--feed-forward/--no-feed-forward", help="Apply the branch corrections."),
    format: OutputFormat = typer.Option(OutputFormat.json, "--format"),
    out: Optional[Path] = typer.Option(None, "--out"),
    timing: bool = typer.Option(False, "--timing"),
    record: bool = typer.Option(False, "--record"),
):
    """
    Success probability, per-path table and conditional fidelity of a scheme.
    """
    with usage_errors():
        config = RunConfig(
            command="optics",
            scheme=scheme.value,
            input=input,
            seed=seed,
            feed_forward=feed_forward,
            format=format,
            out=out,
            timing=timing,
            record=record,
        )
        report = VerificationService().run(config)
    finish(report, config)
