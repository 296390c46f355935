"""
describe - dump a scheme descriptor (networks, branches, corrections, encoding).
"""

from pathlib import Path
from typing import Optional

import typer

from ..schemas import RunConfig
from ..service import VerificationService
from .common import emit, usage_errors
from .optics import SchemeName


def describe(
    scheme: SchemeName = typer.Option(..., "--scheme"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    with usage_errors():
        config = RunConfig(command="describe", scheme=scheme.value, out=out)
        descriptor = VerificationService().describe(config)
    emit(descriptor.model_dump_json(indent=2), config.out)
