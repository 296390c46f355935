"""
Qudit Gates - command-line front end

Run with:
    python -m qudit_gates verify circuit --gate toffoli --controls 3
    python -m qudit_gates optics --scheme toffoli --input random --seed 7
    python -m qudit_gates table1 --format csv --out table1.csv
"""

import logging
import os
import sys

import typer

from .commands import cost, describe, optics, runs, table1, verify

LOG_LEVEL = os.environ.get("QUDIT_GATES_LOG_LEVEL", "WARNING")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Initialize app
app = typer.Typer(
    name="qudit-gates",
    help="Verify qudit-assisted CNOT and Toffoli gates in the circuit model and in linear optics.",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
def main(
    log_level: str = typer.Option(LOG_LEVEL, "--log-level", help="Logging level; logs go to stderr."),
):
    level = logging.getLevelName(log_level.upper())
    if not isinstance(level, int):
        raise typer.BadParameter(f"unknown log level {log_level!r}", param_hint="--log-level")
    logging.basicConfig(level=level, stream=sys.stderr, format=LOG_FORMAT)
    logging.getLogger("qudit_gates").setLevel(level)


# Include commands
app.add_typer(verify.app, name="verify")
app.command("optics")(optics.optics)
app.command("table1")(table1.table1)
app.command("cost")(cost.cost)
app.command("describe")(describe.describe)
app.command("runs")(runs.runs)


if __name__ == "__main__":
    app()
