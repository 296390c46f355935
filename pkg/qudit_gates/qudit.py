"""
Mixed-radix qudit registers.

State vectors are dense complex arrays indexed row-major with site 0 as the
most significant digit, so the leftmost ket factor of |c>|t> is site 0.
Gates are dense matrices on their target sites and are embedded on demand.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConsistencyError, DomainError

ATOL = 1e-9
UNITARY_ATOL = 1e-10
ZERO_ATOL = 1e-12


@dataclass(frozen=True)
class SiteDims:
    """Per-site level counts of a register."""

    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise DomainError("a register needs at least one site")
        if any(d < 2 for d in dims):
            raise DomainError(f"every site needs at least 2 levels, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def of(cls, dims: Union["SiteDims", Sequence[int]]) -> "SiteDims":
        return dims if isinstance(dims, SiteDims) else cls(tuple(dims))

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, index):
        return self.dims[index]

    def index_of(self, levels: Sequence[int]) -> int:
        """Flat amplitude index of a basis element."""
        if len(levels) != len(self.dims):
            raise DomainError(f"expected {len(self.dims)} levels, got {len(levels)}")
        for site, (level, d) in enumerate(zip(levels, self.dims)):
            if not 0 <= level < d:
                raise DomainError(f"level {level} out of range for site {site} with {d} levels")
        return int(np.ravel_multi_index(tuple(levels), self.dims))

    def levels_of(self, index: int) -> Tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(index, self.dims))

    def computational_indices(self) -> List[int]:
        """Flat indices of the all-sites-in-{0,1} subspace, in qubit order."""
        return [
            int(np.ravel_multi_index(levels, self.dims))
            for levels in itertools.product((0, 1), repeat=len(self.dims))
        ]


DimsLike = Union[SiteDims, Sequence[int]]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over a mixed-radix register."""

    dims: SiteDims
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = SiteDims.of(self.dims)
        amps = _frozen(np.ravel(self.amps))
        if amps.shape != (dims.size,):
            raise DomainError(f"expected {dims.size} amplitudes for dims {dims.dims}, got {amps.size}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > ATOL:
            raise DomainError(f"state is not normalized (norm {norm:.12g})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_terms(cls, dims: DimsLike, terms: Mapping[Tuple[int, ...], complex]) -> "PureState":
        """Build a state from {levels: amplitude}; amplitudes must already be normalized."""
        dims = SiteDims.of(dims)
        amps = np.zeros(dims.size, dtype=complex)
        for levels, amp in terms.items():
            amps[dims.index_of(levels)] += amp
        return cls(dims, amps)

    @property
    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims.dims)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def basis_label(self, tol: float = ATOL) -> Optional[str]:
        """Digit string of the basis element if the state is one (up to phase)."""
        probs = self.probabilities()
        index = int(np.argmax(probs))
        if abs(probs[index] - 1.0) > tol:
            return None
        return "".join(str(level) for level in self.dims.levels_of(index))


@dataclass(frozen=True)
class GateOp:
    """A unitary acting on an ordered list of target sites."""

    matrix: np.ndarray = field(repr=False)
    sites: Tuple[int, ...] = (0,)
    label: str = ""

    def __post_init__(self):
        matrix = _frozen(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError(f"gate matrix must be square, got shape {matrix.shape}")
        if not is_unitary(matrix, UNITARY_ATOL):
            raise DomainError(f"gate {self.label or '?'} is not unitary")
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise DomainError(f"gate sites must be distinct, got {sites}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "sites", sites)

    def on(self, *sites: int) -> "GateOp":
        """Same matrix retargeted to other sites."""
        return GateOp(self.matrix, tuple(sites), self.label)

    @property
    def arity(self) -> int:
        return len(self.sites)

    def describe(self) -> str:
        return f"{self.label or 'U'}{list(self.sites)}"


@dataclass(frozen=True)
class Circuit:
    dims: SiteDims
    ops: Tuple[GateOp, ...] = ()

    def __post_init__(self):
        dims = SiteDims.of(self.dims)
        ops = tuple(self.ops)
        for position, op in enumerate(ops):
            _check_gate_fits(op, dims, where=f"op {position}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "ops", ops)

    def __len__(self) -> int:
        return len(self.ops)

    def then(self, *ops: GateOp) -> "Circuit":
        return Circuit(self.dims, self.ops + tuple(ops))


def is_unitary(matrix: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    ident = np.eye(matrix.shape[0], dtype=complex)
    return bool(np.allclose(matrix @ matrix.conj().T, ident, rtol=0.0, atol=atol))


def _check_gate_fits(gate: GateOp, dims: SiteDims, where: str = "gate") -> None:
    for site in gate.sites:
        if not 0 <= site < len(dims):
            raise DomainError(f"{where}: site {site} outside register of {len(dims)} sites")
    expected = math.prod(dims[s] for s in gate.sites)
    if gate.matrix.shape[0] != expected:
        raise DomainError(
            f"{where}: matrix of size {gate.matrix.shape[0]} does not match "
            f"sites {list(gate.sites)} with {expected} levels"
        )


def _apply_on_axes(matrix: np.ndarray, sites: Sequence[int], site_dims: Sequence[int], tensor: np.ndarray) -> np.ndarray:
    """Contract a gate matrix into the given leading axes of a tensor."""
    k = len(sites)
    sub = [site_dims[s] for s in sites]
    u = matrix.reshape(sub + sub)
    moved = np.moveaxis(tensor, list(sites), list(range(k)))
    out = np.tensordot(u, moved, axes=(list(range(k, 2 * k)), list(range(k))))
    return np.moveaxis(out, list(range(k)), list(sites))


def basis_state(dims: DimsLike, levels: Sequence[int]) -> PureState:
    dims = SiteDims.of(dims)
    amps = np.zeros(dims.size, dtype=complex)
    amps[dims.index_of(levels)] = 1.0
    return PureState(dims, amps)


def random_state(dims: DimsLike, rng: Union[np.random.Generator, int, None] = None) -> PureState:
    """Complex-Gaussian random state; ``rng`` may be a seed for PCG64."""
    dims = SiteDims.of(dims)
    rng = np.random.default_rng(rng)
    amps = rng.normal(size=dims.size) + 1j * rng.normal(size=dims.size)
    return PureState(dims, amps / np.linalg.norm(amps))


def apply_gate(state: PureState, gate: GateOp) -> PureState:
    _check_gate_fits(gate, state.dims)
    out = _apply_on_axes(gate.matrix, gate.sites, state.dims.dims, state.tensor)
    return PureState(state.dims, out.ravel())


def evolve_stepwise(circuit: Circuit, state: PureState) -> List[PureState]:
    """States after every gate of the circuit, in order."""
    if state.dims != circuit.dims:
        raise DomainError(f"state dims {state.dims.dims} do not match circuit dims {circuit.dims.dims}")
    states = []
    for op in circuit.ops:
        state = apply_gate(state, op)
        states.append(state)
    return states


def embed_gate(gate: GateOp, dims: DimsLike) -> np.ndarray:
    """Full-register matrix of a gate acting on its target sites."""
    dims = SiteDims.of(dims)
    _check_gate_fits(gate, dims)
    ident = np.eye(dims.size, dtype=complex).reshape(dims.dims + (dims.size,))
    return _apply_on_axes(gate.matrix, gate.sites, dims.dims, ident).reshape(dims.size, dims.size)


def compose_unitary(circuit: Circuit) -> np.ndarray:
    """Ordered product of the embedded gate unitaries (last gate leftmost)."""
    total = np.eye(circuit.dims.size, dtype=complex)
    for op in circuit.ops:
        total = embed_gate(op, circuit.dims) @ total
    if not is_unitary(total, ATOL):
        raise ConsistencyError("composed circuit is not unitary")
    return total


def restrict_to_computational(unitary: np.ndarray, dims: DimsLike) -> np.ndarray:
    dims = SiteDims.of(dims)
    if unitary.shape != (dims.size, dims.size):
        raise DomainError(f"matrix shape {unitary.shape} does not match register size {dims.size}")
    idx = dims.computational_indices()
    return unitary[np.ix_(idx, idx)]


def states_equal(a: PureState, b: PureState, up_to_global_phase: bool = False, atol: float = ATOL) -> bool:
    if a.dims != b.dims:
        raise DomainError(f"cannot compare states on {a.dims.dims} and {b.dims.dims}")
    lhs = a.amps
    if up_to_global_phase:
        overlap = np.vdot(a.amps, b.amps)
        if abs(overlap) > ZERO_ATOL:
            lhs = lhs * (overlap / abs(overlap))
    return bool(np.max(np.abs(lhs - b.amps)) <= atol)


def leakage(state: PureState) -> float:
    """Population outside the all-sites-in-{0,1} subspace."""
    inside = float(np.sum(state.probabilities()[state.dims.computational_indices()]))
    return max(0.0, 1.0 - inside)


def fidelity(a: PureState, b: PureState) -> float:
    if a.dims != b.dims:
        raise DomainError(f"cannot compare states on {a.dims.dims} and {b.dims.dims}")
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


def apply_matrix(state: PureState, unitary: np.ndarray) -> PureState:
    """Apply a full-register matrix (e.g. an oracle from compose_unitary)."""
    if unitary.shape != (state.dims.size, state.dims.size):
        raise DomainError(f"matrix shape {unitary.shape} does not match register size {state.dims.size}")
    return PureState(state.dims, unitary @ state.amps)


def computational_basis(dims: DimsLike) -> Iterable[Tuple[Tuple[int, ...], PureState]]:
    dims = SiteDims.of(dims)
    for levels in itertools.product((0, 1), repeat=len(dims)):
        yield levels, basis_state(dims, levels)


def embed_computational(amps: np.ndarray, dims: DimsLike) -> PureState:
    """Lift 2^k computational amplitudes into the full register."""
    dims = SiteDims.of(dims)
    full = np.zeros(dims.size, dtype=complex)
    full[dims.computational_indices()] = amps
    return PureState(dims, full)


def parse_levels(label: str, dims: DimsLike) -> Tuple[int, ...]:
    """'10' -> (1, 0), validated against dims."""
    dims = SiteDims.of(dims)
    if len(label) != len(dims) or not label.isdigit():
        raise DomainError(f"basis label {label!r} must be {len(dims)} digits")
    levels = tuple(int(ch) for ch in label)
    dims.index_of(levels)
    return levels


__all__: List[str] = [
    "ATOL",
    "UNITARY_ATOL",
    "ZERO_ATOL",
    "SiteDims",
    "PureState",
    "GateOp",
    "Circuit",
    "basis_state",
    "random_state",
    "apply_gate",
    "apply_matrix",
    "evolve_stepwise",
    "embed_gate",
    "compose_unitary",
    "restrict_to_computational",
    "states_equal",
    "leakage",
    "fidelity",
    "computational_basis",
    "embed_computational",
    "parse_levels",
    "is_unitary",
]
