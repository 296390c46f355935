"""
Gate constructors and circuit builders for qudit-assisted CNOT and Toffoli gates.

All two-site gates here act only on the computational levels {0, 1} of both
sites; higher levels are shelves that switch the interaction off.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConsistencyError, DomainError
from .qudit import Circuit, GateOp, SiteDims

SQRT_HALF = 1.0 / math.sqrt(2.0)
# dense oracles for more controls exceed a 2**10-amplitude register
MAX_ORACLE_CONTROLS = 7


# ==================== Gate constructors ====================

def gate_level_swap(d: int, a: int, b: int) -> GateOp:
    """Single-qudit permutation |a> <-> |b>, identity on every other level."""
    if d < 2:
        raise DomainError(f"level count must be at least 2, got {d}")
    if a == b or not (0 <= a < d and 0 <= b < d):
        raise DomainError(f"invalid level pair ({a}, {b}) for d={d}")
    m = np.eye(d, dtype=complex)
    m[[a, b]] = m[[b, a]]
    return GateOp(m, (0,), f"X({a}<->{b})")


def gate_h(d: int) -> GateOp:
    if d < 2:
        raise DomainError(f"level count must be at least 2, got {d}")
    m = np.eye(d, dtype=complex)
    m[:2, :2] = SQRT_HALF * np.array([[1, 1], [1, -1]])
    return GateOp(m, (0,), "H")


def gate_sz(d: int) -> GateOp:
    if d < 2:
        raise DomainError(f"level count must be at least 2, got {d}")
    m = np.eye(d, dtype=complex)
    m[1, 1] = -1
    return GateOp(m, (0,), "Z")


def _two_site_permutation(d1: int, d2: int, rule, label: str) -> GateOp:
    if d1 < 2 or d2 < 2:
        raise DomainError(f"level counts must be at least 2, got ({d1}, {d2})")
    m = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for a, b in itertools.product(range(d1), range(d2)):
        a2, b2 = rule(a, b)
        m[a2 * d2 + b2, a * d2 + b] = 1
    return GateOp(m, (0, 1), label)


def gate_pswap(d1: int, d2: int) -> GateOp:
    """Partial swap: |a,b> -> |b,a> for a, b in {0,1}; identity otherwise."""
    def rule(a, b):
        return (b, a) if a < 2 and b < 2 else (a, b)

    return _two_site_permutation(d1, d2, rule, "PSWAP")


def gate_cnot(dc: int, dt: int = 2) -> GateOp:
    """Flips the target's {0,1} levels iff the control sits on level 1."""
    def rule(c, t):
        return (c, 1 - t) if c == 1 and t < 2 else (c, t)

    return _two_site_permutation(dc, dt, rule, "CNOT")


# ==================== Circuit builders ====================

def _cnot_ops(control: int, target: int, dc: int = 3) -> Tuple[GateOp, ...]:
    x_a = gate_level_swap(dc, 1, 2).on(control)
    h = gate_h(2).on(target)
    pswap = gate_pswap(dc, 2).on(control, target)
    return (x_a, h, pswap, gate_sz(2).on(target), pswap, x_a, h)


def build_cnot_circuit() -> Circuit:
    """CNOT from a qutrit control: X(1<->2), H, PSWAP, Z, PSWAP, X(1<->2), H."""
    return Circuit(SiteDims((3, 2)), _cnot_ops(0, 1))


def build_toffoli3_circuit(inline_cnot: bool = False) -> Circuit:
    """
    Three-qubit Toffoli on (c1, c2, t) with c2 widened to a qutrit.

    With ``inline_cnot`` the central CNOT is expanded into the qutrit
    construction of build_cnot_circuit, which widens c1 as well.
    """
    dc1 = 3 if inline_cnot else 2
    x_a = gate_level_swap(3, 1, 2).on(1)
    pswap = gate_pswap(dc1, 3).on(0, 1)
    middle = _cnot_ops(0, 2) if inline_cnot else (gate_cnot(2, 2).on(0, 2),)
    return Circuit(SiteDims((dc1, 3, 2)), (x_a, pswap) + middle + (pswap, x_a))


@dataclass(frozen=True)
class ToffoliPlan:
    circuit: Circuit
    two_site_count: int
    single_qudit_count: int
    controls: int

    def __post_init__(self):
        two, single = gate_tally(self.circuit)
        if (two, single) != (self.two_site_count, self.single_qudit_count):
            raise ConsistencyError(
                f"plan counts ({self.two_site_count}, {self.single_qudit_count}) "
                f"disagree with circuit tallies ({two}, {single})"
            )


def build_toffoli_n(n: int) -> ToffoliPlan:
    """
    n-control Toffoli with c_n widened to n+1 levels.

    c_n collects the AND of all controls on its level 1: before each P-SWAP
    with the next control its level 0 is shelved to a fresh level, so only a
    still-true conjunction keeps swapping. A CNOT from c_n then drives the
    target and the chain is undone in reverse.
    """
    if n < 2:
        raise DomainError(f"an n-control Toffoli needs n >= 2, got {n}")
    if n == 2:
        circuit = build_toffoli3_circuit()
        return ToffoliPlan(circuit, 3, 2, 2)

    cn, target = n - 1, n
    dims = SiteDims((2,) * (n - 1) + (n + 1, 2))
    compute = []
    for k in range(1, n):
        compute.append(gate_level_swap(n + 1, 0, k + 1).on(cn))
        compute.append(gate_pswap(2, n + 1).on(n - k - 1, cn))
    ops = tuple(compute) + (gate_cnot(n + 1, 2).on(cn, target),) + tuple(reversed(compute))
    return ToffoliPlan(Circuit(dims, ops), 2 * n - 1, 2 * n - 2, n)


@dataclass(frozen=True)
class CostReport:
    qubits: int
    two_site: int
    single_qudit: int


def cost_report(m: int) -> CostReport:
    if m < 3:
        raise DomainError(f"a Toffoli needs at least 3 qubits, got {m}")
    return CostReport(m, 2 * m - 3, 2 * m - 4)


def gate_tally(circuit: Circuit) -> Tuple[int, int]:
    """(two-site gates, single-site gates)."""
    two = sum(1 for op in circuit.ops if op.arity == 2)
    single = sum(1 for op in circuit.ops if op.arity == 1)
    return two, single


# ==================== Reference matrices ====================

def ideal_toffoli(n: int) -> np.ndarray:
    """(n+1)-qubit multi-controlled NOT on 2^(n+1) levels, target last."""
    if n < 1:
        raise DomainError(f"need at least one control, got {n}")
    size = 2 ** (n + 1)
    m = np.eye(size, dtype=complex)
    m[[size - 2, size - 1]] = m[[size - 1, size - 2]]
    return m


def ideal_cnot() -> np.ndarray:
    return ideal_toffoli(1)
