"""
Tests for gate constructors, circuit builders and gate counts.
"""

import numpy as np
import pytest

from qudit_gates.errors import ConsistencyError, DomainError
from qudit_gates.qudit import (
    Circuit,
    SiteDims,
    apply_gate,
    apply_matrix,
    basis_state,
    compose_unitary,
    computational_basis,
    is_unitary,
    leakage,
    restrict_to_computational,
)
from qudit_gates.synthesis import (
    ToffoliPlan,
    build_cnot_circuit,
    build_toffoli3_circuit,
    build_toffoli_n,
    cost_report,
    gate_cnot,
    gate_h,
    gate_level_swap,
    gate_pswap,
    gate_sz,
    gate_tally,
    ideal_cnot,
    ideal_toffoli,
)


class TestGates:

    @pytest.mark.parametrize("levels,expected", [
        ((0, 0), "00"),
        ((0, 1), "10"),
        ((1, 0), "01"),
        ((1, 1), "11"),
        ((2, 0), "20"),
        ((2, 1), "21"),
    ])
    def test_pswap_truth_table(self, levels, expected):
        out = apply_gate(basis_state((3, 2), levels), gate_pswap(3, 2))
        assert out.basis_label() == expected

    def test_pswap_is_identity_when_either_site_is_shelved(self):
        gate = gate_pswap(3, 3)
        for levels in [(2, 0), (0, 2), (2, 2), (1, 2)]:
            assert apply_gate(basis_state((3, 3), levels), gate).basis_label() == "".join(map(str, levels))

    def test_cnot_ignores_shelved_control(self):
        gate = gate_cnot(3, 2)
        assert apply_gate(basis_state((3, 2), (1, 0)), gate).basis_label() == "11"
        assert apply_gate(basis_state((3, 2), (2, 0)), gate).basis_label() == "20"
        assert apply_gate(basis_state((3, 2), (0, 1)), gate).basis_label() == "01"

    def test_single_qudit_gates_leave_higher_levels(self):
        for gate in (gate_h(3), gate_sz(3), gate_level_swap(4, 0, 1)):
            assert is_unitary(gate.matrix)
            assert gate.matrix[-1, -1] == 1

    def test_level_swap_label(self):
        assert gate_level_swap(3, 1, 2).label == "X(1<->2)"

    @pytest.mark.parametrize("d,a,b", [(1, 0, 0), (3, 1, 1), (3, 0, 3), (2, -1, 0)])
    def test_level_swap_rejects(self, d, a, b):
        with pytest.raises(DomainError):
            gate_level_swap(d, a, b)

    def test_ideal_matrices(self):
        toffoli = ideal_toffoli(2)
        assert toffoli[7, 6] == 1 and toffoli[6, 7] == 1 and toffoli[6, 6] == 0
        np.testing.assert_array_equal(ideal_cnot(), np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))
        with pytest.raises(DomainError):
            ideal_toffoli(0)


class TestBuilders:

    def test_cnot_circuit_sequence(self):
        circuit = build_cnot_circuit()
        assert circuit.dims == SiteDims((3, 2))
        assert [op.label for op in circuit.ops] == ["X(1<->2)", "H", "PSWAP", "Z", "PSWAP", "X(1<->2)", "H"]
        assert gate_tally(circuit) == (2, 5)

    def test_toffoli3_tally(self):
        circuit = build_toffoli3_circuit()
        assert circuit.dims == SiteDims((2, 3, 2))
        assert gate_tally(circuit) == (3, 2)

    def test_toffoli3_inline_widens_first_control(self):
        circuit = build_toffoli3_circuit(inline_cnot=True)
        assert circuit.dims == SiteDims((3, 3, 2))
        assert gate_tally(circuit) == (4, 7)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_toffoli_n_oracle(self, n):
        plan = build_toffoli_n(n)
        circuit = plan.circuit
        restricted = restrict_to_computational(compose_unitary(circuit), circuit.dims)
        assert np.max(np.abs(restricted - ideal_toffoli(n))) <= 1e-9
        assert gate_tally(circuit) == (2 * n - 1, 2 * n - 2)
        assert (plan.two_site_count, plan.single_qudit_count, plan.controls) == (2 * n - 1, 2 * n - 2, n)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_toffoli_n_restores_the_widened_control(self, n):
        circuit = build_toffoli_n(n).circuit
        unitary = compose_unitary(circuit)
        assert circuit.dims[n - 1] == n + 1
        for _, state in computational_basis(circuit.dims):
            assert leakage(apply_matrix(state, unitary)) <= 1e-12

    @pytest.mark.parametrize("n", [0, 1])
    def test_toffoli_n_needs_two_controls(self, n):
        with pytest.raises(DomainError):
            build_toffoli_n(n)

    def test_plan_counts_must_match_circuit(self):
        with pytest.raises(ConsistencyError):
            ToffoliPlan(build_toffoli3_circuit(), 4, 2, 2)

    def test_then_appends(self):
        circuit = Circuit((2,), ()).then(gate_h(2), gate_h(2))
        np.testing.assert_allclose(compose_unitary(circuit), np.eye(2), atol=1e-12)


class TestCostReport:

    @pytest.mark.parametrize("m,expected", [(3, (3, 2)), (4, (5, 4)), (10, (17, 16))])
    def test_known_counts(self, m, expected):
        report = cost_report(m)
        assert (report.two_site, report.single_qudit) == expected

    @pytest.mark.parametrize("m", range(3, 11))
    def test_formula(self, m):
        report = cost_report(m)
        assert (report.qubits, report.two_site, report.single_qudit) == (m, 2 * m - 3, 2 * m - 4)

    @pytest.mark.parametrize("m", range(3, 7))
    def test_agrees_with_builder(self, m):
        report = cost_report(m)
        assert gate_tally(build_toffoli_n(m - 1).circuit) == (report.two_site, report.single_qudit)

    def test_rejects_small_registers(self):
        with pytest.raises(DomainError):
            cost_report(2)
