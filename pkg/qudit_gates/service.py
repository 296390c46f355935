"""
Verification service - runs the circuit-model and optical checks.
Every CLI command goes through here; the database session is optional
and only needed for recording and listing runs.
"""

import logging
import time
from decimal import Decimal
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from sqlalchemy import desc
from sqlalchemy.orm import Session

from . import schemas
from .errors import DomainError, SchemeIntegrityError
from .models import VerificationRun
from .qudit import (
    ATOL,
    ZERO_ATOL,
    Circuit,
    PureState,
    SiteDims,
    apply_matrix,
    basis_state,
    compose_unitary,
    computational_basis,
    leakage,
    parse_levels,
    random_state,
    restrict_to_computational,
)
from .schemes import coincidence_table, get_scheme, run_gate, scheme_pswap
from .synthesis import (
    build_cnot_circuit,
    build_toffoli3_circuit,
    build_toffoli_n,
    cost_report,
    gate_tally,
    ideal_cnot,
    ideal_toffoli,
)

logger = logging.getLogger(__name__)

CNOT_COUNTS = (2, 5)
BUILDER_CROSS_CHECK_MAX = 6
TABLE_CELL = Fraction(1, 8)


# ==================== Exact values ====================

def as_dyadic(value: float, max_power: int = 16, tol: float = ZERO_ATOL) -> Optional[Fraction]:
    """k / 2^m if value is one within tol, else None."""
    for power in range(max_power + 1):
        scale = 1 << power
        k = round(value * scale)
        if abs(value - k / scale) <= tol:
            return Fraction(k, scale)
    return None


def dyadic_decimal(value: Fraction) -> str:
    """Exact decimal expansion of a dyadic rational, e.g. '0.125'."""
    return str(Decimal(value.numerator) / Decimal(value.denominator))


def exact_label(value: float) -> Optional[str]:
    frac = as_dyadic(value)
    return None if frac is None else str(frac)


def table_cell(value: float) -> str:
    frac = as_dyadic(value)
    if frac is None:
        raise DomainError(f"coincidence value {value!r} is not a dyadic rational")
    return dyadic_decimal(frac)


def _check(
    name: str,
    measured: float,
    expected: float,
    tol: float,
    exact: bool = False,
    detail: Optional[str] = None,
) -> schemas.CheckResult:
    return schemas.CheckResult(
        name=name,
        passed=abs(measured - expected) <= tol,
        measured=measured,
        expected=expected,
        tolerance=tol,
        exact=exact_label(measured) if exact else None,
        detail=detail,
    )


def _digits(levels) -> str:
    return "".join(str(level) for level in levels)


class VerificationService:
    """
    Drives the verifications behind each CLI command.
    """

    def __init__(self, db: Optional[Session] = None):
        self.db = db

    def run(self, config: schemas.RunConfig) -> schemas.Report:
        """Build the report for one validated configuration."""
        handlers = {
            schemas.Command.verify: self.verify_circuit,
            schemas.Command.optics: self.run_optics,
            schemas.Command.table1: lambda c: self.table1(c)[1],
            schemas.Command.cost: self.cost,
        }
        if config.command not in handlers:
            raise DomainError(f"command {config.command.value!r} does not produce a report")
        started = time.perf_counter()
        report = handlers[config.command](config)
        if config.timing:
            report.duration_seconds = round(time.perf_counter() - started, 6)
        logger.info("%s finished with status %s", config.command.value, report.status)
        return report

    # ==================== Circuit model ====================

    def verify_circuit(self, config: schemas.RunConfig) -> schemas.Report:
        if config.gate == "cnot":
            circuit, ideal = build_cnot_circuit(), ideal_cnot()
            expected_counts = CNOT_COUNTS
        else:
            plan = build_toffoli_n(config.controls)
            circuit, ideal = plan.circuit, ideal_toffoli(plan.controls)
            expected_counts = (2 * plan.controls - 1, 2 * plan.controls - 2)

        # 1. Oracle equivalence, truth table and leakage
        checks, table = self._oracle_checks("oracle", circuit, ideal)

        # 2. Gate counts
        two, single = gate_tally(circuit)
        checks.append(_check("two_site_gates", two, expected_counts[0], 0))
        checks.append(_check("single_qudit_gates", single, expected_counts[1], 0))

        # 3. The dotted-rectangle variant of the three-qubit Toffoli
        if config.gate == "toffoli" and config.controls == 2:
            inline_checks, _ = self._oracle_checks("inline_cnot_oracle", build_toffoli3_circuit(inline_cnot=True), ideal)
            checks.extend(inline_checks)

        values = {
            "gate": config.gate,
            "dims": list(circuit.dims),
            "two_site": two,
            "single_qudit": single,
            "truth_table": table,
        }
        return schemas.Report.from_checks("verify", config.arguments(), checks, values)

    def _oracle_checks(
        self, prefix: str, circuit: Circuit, ideal: np.ndarray
    ) -> Tuple[List[schemas.CheckResult], Dict[str, Optional[str]]]:
        unitary = compose_unitary(circuit)
        restricted = restrict_to_computational(unitary, circuit.dims)
        error = float(np.max(np.abs(restricted - ideal)))
        checks = [_check(f"{prefix}_max_error", error, 0.0, ATOL)]

        table: Dict[str, Optional[str]] = {}
        rows, worst = 0, 0.0
        for levels, state in computational_basis(circuit.dims):
            out = apply_matrix(state, unitary)
            flip = int(all(levels[:-1]))
            expected = _digits(levels[:-1] + (levels[-1] ^ flip,))
            got = out.basis_label()
            table[_digits(levels)] = got
            rows += int(got == expected)
            worst = max(worst, leakage(out))
        total = len(table)
        checks.append(_check(f"{prefix}_truth_table", rows, total, 0, detail=f"{rows}/{total} rows"))
        checks.append(_check(f"{prefix}_leakage", worst, 0.0, ZERO_ATOL))
        return checks, table

    # ==================== Optical schemes ====================

    def _optics_inputs(self, dims: SiteDims, config: schemas.RunConfig) -> List[Tuple[str, PureState]]:
        if config.input is None:
            return [
                (_digits(dims.levels_of(k)), basis_state(dims, dims.levels_of(k)))
                for k in range(dims.size)
            ]
        if config.input == "random":
            return [(f"random:{config.seed}", random_state(dims, config.seed))]
        levels = parse_levels(config.input, dims)
        return [(config.input, basis_state(dims, levels))]

    def run_optics(self, config: schemas.RunConfig) -> schemas.Report:
        scheme = get_scheme(config.scheme)
        if not config.feed_forward:
            scheme = scheme.without_feed_forward()
        expected = float(scheme.expected_success)

        checks: List[schemas.CheckResult] = []
        runs: List[Dict[str, Any]] = []
        for label, state in self._optics_inputs(scheme.encoding.dims, config):
            try:
                result = run_gate(scheme, state)
            except SchemeIntegrityError as e:
                logger.warning("%s on input %s: %s", scheme.name, label, e)
                checks.append(schemas.CheckResult(name=f"unanimity[{label}]", passed=False, detail=str(e)))
                runs.append({"input": label, "error": str(e)})
                continue
            checks.append(_check(f"success[{label}]", result.success_probability, expected, ATOL, exact=True))
            checks.append(_check(f"fidelity[{label}]", result.fidelity_vs_ideal, 1.0, ATOL))
            checks.append(_check(f"leakage[{label}]", result.leakage, 0.0, ZERO_ATOL))
            runs.append({
                "input": label,
                "output": result.conditional_output.basis_label(),
                "success_probability": result.success_probability,
                "success_exact": exact_label(result.success_probability),
                "fidelity": result.fidelity_vs_ideal,
                "paths": [
                    {"branches": p.label, "probability": p.probability, "exact": exact_label(p.probability)}
                    for p in result.paths
                ],
            })

        values = {
            "scheme": scheme.name,
            "expected_success": str(scheme.expected_success),
            "runs": runs,
        }
        return schemas.Report.from_checks("optics", config.arguments(), checks, values)

    def table1(self, config: schemas.RunConfig) -> Tuple[schemas.CoincidenceTableSchema, schemas.Report]:
        """Coincidence table of the P-SWAP scheme plus its pattern checks."""
        table = coincidence_table(scheme_pswap())
        expected = np.zeros_like(table.corrected)
        blocks = len(table.columns) // len(table.inputs)
        for row in range(len(table.inputs)):
            for block in range(blocks):
                expected[row, block * len(table.inputs) + row] = float(TABLE_CELL)

        checks = [
            _check("pattern_max_error", float(np.max(np.abs(table.corrected - expected))), 0.0, ZERO_ATOL),
            _check("signed_magnitudes", float(np.max(np.abs(np.abs(table.signed) - table.corrected))), 0.0, ZERO_ATOL),
        ]
        for row, name in enumerate(table.inputs):
            checks.append(_check(f"success[{name}]", float(table.corrected[row].sum()), 0.5, ATOL, exact=True))
        negative = [
            f"{table.inputs[r]}:{table.columns[c]}"
            for r, c in zip(*np.nonzero(table.signed < -ZERO_ATOL))
        ]
        report = schemas.Report.from_checks("table1", config.arguments(), checks, {"sign_flipped_cells": negative})
        return schemas.CoincidenceTableSchema.from_table(table), report

    # ==================== Cost ====================

    def cost(self, config: schemas.RunConfig) -> schemas.Report:
        m = config.qubits
        report = cost_report(m)
        checks = [
            _check("two_site_formula", report.two_site, 2 * m - 3, 0),
            _check("single_qudit_formula", report.single_qudit, 2 * m - 4, 0),
        ]
        if m <= BUILDER_CROSS_CHECK_MAX:
            two, single = gate_tally(build_toffoli_n(m - 1).circuit)
            checks.append(_check("builder_two_site", two, report.two_site, 0))
            checks.append(_check("builder_single_qudit", single, report.single_qudit, 0))
        values = {"qubits": report.qubits, "two_site": report.two_site, "single_qudit": report.single_qudit}
        return schemas.Report.from_checks("cost", config.arguments(), checks, values)

    def describe(self, config: schemas.RunConfig) -> schemas.SchemeSchema:
        return schemas.SchemeSchema.from_descriptor(get_scheme(config.scheme))

    # ==================== Run ledger ====================

    def save_report(self, report: schemas.Report) -> int:
        """Store a report and return its row id."""
        if self.db is None:
            raise DomainError("recording a run needs a database session")
        run = VerificationRun(
            command=report.command,
            status=report.status,
            arguments=report.arguments,
            report=report.model_dump(mode="json"),
        )
        self.db.add(run)
        self.db.commit()
        self.db.refresh(run)
        logger.info("Recorded %s run %d", report.command, run.id)
        return run.id

    def list_runs(self, limit: int = 20, command: Optional[str] = None) -> List[schemas.RunSummary]:
        if self.db is None:
            raise DomainError("listing runs needs a database session")
        query = self.db.query(VerificationRun)
        if command:
            query = query.filter(VerificationRun.command == command)
        rows = query.order_by(desc(VerificationRun.id)).limit(limit).all()
        return [schemas.RunSummary.model_validate(row) for row in rows]

    def get_run(self, run_id: int) -> Optional[schemas.Report]:
        if self.db is None:
            raise DomainError("reading runs needs a database session")
        row = self.db.get(VerificationRun, run_id)
        return None if row is None else schemas.Report.model_validate(row.report)
