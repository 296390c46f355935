"""
Tests for the verification service and its report contents.
"""

from fractions import Fraction

import pytest

from qudit_gates.errors import DomainError
from qudit_gates.schemas import Report, RunConfig
from qudit_gates.service import VerificationService, as_dyadic, dyadic_decimal, exact_label, table_cell


def config(**kwargs) -> RunConfig:
    return RunConfig(**kwargs)


def check(report: Report, name: str):
    return next(c for c in report.checks if c.name == name)


# ==================== Exact values ====================

class TestDyadic:

    @pytest.mark.parametrize("value,expected", [
        (0.5, Fraction(1, 2)),
        (0.125, Fraction(1, 8)),
        (1 / 64, Fraction(1, 64)),
        (-0.125 + 1e-15, Fraction(-1, 8)),
        (0.0, Fraction(0)),
    ])
    def test_as_dyadic(self, value, expected):
        assert as_dyadic(value) == expected

    def test_not_dyadic(self):
        assert as_dyadic(1 / 3) is None
        assert exact_label(1 / 3) is None
        with pytest.raises(DomainError):
            table_cell(0.3)

    def test_decimals_are_exact(self):
        assert dyadic_decimal(Fraction(1, 8)) == "0.125"
        assert dyadic_decimal(Fraction(1, 64)) == "0.015625"
        assert table_cell(-0.125) == "-0.125"
        assert table_cell(-1e-20) == "0"


# ==================== Commands ====================

class TestVerifyCircuit:

    def test_cnot(self):
        report = VerificationService().run(config(command="verify", gate="cnot"))
        assert report.passed
        assert check(report, "oracle_truth_table").detail == "4/4 rows"
        assert report.values["truth_table"]["11"] == "10"
        assert report.duration_seconds is None

    def test_toffoli_three_controls(self):
        report = VerificationService().run(config(command="verify", gate="toffoli", controls=3))
        assert report.passed
        assert (report.values["two_site"], report.values["single_qudit"]) == (5, 4)
        assert check(report, "oracle_truth_table").detail == "16/16 rows"

    def test_toffoli_two_controls_checks_inline_variant(self):
        report = VerificationService().run(config(command="verify", gate="toffoli", controls=2))
        assert report.passed
        assert check(report, "inline_cnot_oracle_max_error").passed

    def test_timing_is_opt_in(self):
        report = VerificationService().run(config(command="verify", gate="cnot", timing=True))
        assert report.duration_seconds is not None and report.duration_seconds >= 0


class TestOptics:

    def test_pswap_swap_row(self):
        report = VerificationService().run(config(command="optics", scheme="pswap", input="10"))
        assert report.passed
        (run,) = report.values["runs"]
        assert run["output"] == "01"
        assert run["success_exact"] == "1/2"
        assert [p["exact"] for p in run["paths"]] == ["1/8"] * 4

    def test_cnot_flip(self):
        report = VerificationService().run(config(command="optics", scheme="cnot", input="11"))
        assert report.passed
        (run,) = report.values["runs"]
        assert run["output"] == "10"
        assert run["success_probability"] == pytest.approx(0.125)

    def test_toffoli_random(self):
        report = VerificationService().run(config(command="optics", scheme="toffoli", input="random", seed=7))
        assert report.passed
        assert check(report, "success[random:7]").exact == "1/64"
        assert check(report, "fidelity[random:7]").measured == pytest.approx(1.0)

    def test_sweeps_every_basis_input(self):
        report = VerificationService().run(config(command="optics", scheme="pswap"))
        assert [r["input"] for r in report.values["runs"]] == ["00", "01", "10", "11", "20", "21"]

    def test_negative_control_fails(self):
        report = VerificationService().run(
            config(command="optics", scheme="cnot", input="random", seed=3, feed_forward=False)
        )
        assert not report.passed
        assert report.checks[0].name == "unanimity[random:3]"

    def test_bad_basis_label(self):
        with pytest.raises(DomainError):
            VerificationService().run(config(command="optics", scheme="cnot", input="12"))


class TestTableAndCost:

    def test_table1(self):
        table, report = VerificationService().table1(config(command="table1", scheme="pswap"))
        assert report.passed
        assert len(table.columns) == 24
        assert len(report.values["sign_flipped_cells"]) == 4

    @pytest.mark.parametrize("m,expected", [(3, (3, 2)), (4, (5, 4)), (8, (13, 12))])
    def test_cost(self, m, expected):
        report = VerificationService().run(config(command="cost", qubits=m))
        assert report.passed
        assert (report.values["two_site"], report.values["single_qudit"]) == expected
        assert any(c.name == "builder_two_site" for c in report.checks) == (m <= 6)

    def test_describe(self):
        described = VerificationService().describe(config(command="describe", scheme="cnot"))
        assert described.expected_success == "1/8"
        assert [s.name for s in described.stages] == ["a.cnot", "b.cnot"]
        assert described.stages[1].branches[2].feed_forward[0].kind == "HWP"


# ==================== Run ledger ====================

class TestLedger:

    def test_save_and_list(self, db_session):
        service = VerificationService(db_session)
        report = service.run(config(command="cost", qubits=4))
        run_id = service.save_report(report)

        runs = service.list_runs()
        assert [r.id for r in runs] == [run_id]
        assert runs[0].command == "cost" and runs[0].status == "pass"
        assert service.get_run(run_id) == report
        assert service.get_run(run_id + 1) is None
        assert service.list_runs(command="verify") == []

    def test_needs_a_session(self):
        report = VerificationService().run(config(command="cost", qubits=3))
        with pytest.raises(DomainError):
            VerificationService().save_report(report)
