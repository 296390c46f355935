"""
Linear-optical network simulator.

Each spatial rail carries an H and a V mode. Elements compile to a
single-particle unitary over all registered modes, and N photons are
modelled as distinguishable carriers: a rank-N amplitude tensor with one
axis per photon. Post-selection keeps the tensor entries where every
photon lands in a different acceptance slot of a branch.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import ClassVar, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConsistencyError, DomainError, SchemeIntegrityError
from .qudit import ATOL, UNITARY_ATOL, ZERO_ATOL, is_unitary

logger = logging.getLogger(__name__)

SQRT_HALF = 1.0 / math.sqrt(2.0)


class Pol(str, Enum):
    H = "H"
    V = "V"


@dataclass(frozen=True, order=True)
class Mode:
    spatial: str
    pol: Pol

    def __post_init__(self):
        object.__setattr__(self, "pol", Pol(self.pol))

    def __str__(self) -> str:
        return f"{self.pol.value}{self.spatial}"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        """'V1'' -> Mode("1'", V)."""
        if len(text) < 2 or text[0] not in ("H", "V"):
            raise DomainError(f"mode {text!r} must be H or V followed by a rail label")
        return cls(text[1:], Pol(text[0]))


def H(spatial: str) -> Mode:
    return Mode(spatial, Pol.H)


def V(spatial: str) -> Mode:
    return Mode(spatial, Pol.V)


class ModeRegistry:
    """Ordered spatial labels, each contributing (label, H) then (label, V)."""

    def __init__(self, labels: Iterable[str]):
        seen: Dict[str, None] = {}
        for label in labels:
            seen.setdefault(str(label), None)
        self.labels: Tuple[str, ...] = tuple(seen)
        self.modes: Tuple[Mode, ...] = tuple(Mode(s, p) for s in self.labels for p in (Pol.H, Pol.V))
        self._index = {mode: i for i, mode in enumerate(self.modes)}

    def __len__(self) -> int:
        return len(self.modes)

    def __contains__(self, mode: object) -> bool:
        return mode in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ModeRegistry) and self.labels == other.labels

    def __hash__(self) -> int:
        return hash(self.labels)

    def __repr__(self) -> str:
        return f"ModeRegistry({list(self.labels)})"

    def index(self, mode: Mode) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise DomainError(f"mode {mode} is not registered") from None


# ==================== Elements ====================

def hwp_matrix(theta: float) -> np.ndarray:
    """Jones matrix of a half-wave plate at angle theta (radians), basis (H, V)."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


class OpticalElement:
    """Base class; subclasses describe a local transfer between rails."""

    kind: ClassVar[str] = ""

    def transfer(self) -> Tuple[List[Mode], List[Mode], np.ndarray]:
        """(input modes, output modes, matrix with rows = outputs)."""
        raise NotImplementedError

    def params(self) -> Dict[str, object]:
        raise NotImplementedError

    @property
    def labels(self) -> Tuple[str, ...]:
        ins, outs, _ = self.transfer()
        return tuple(dict.fromkeys(m.spatial for m in ins + outs))

    def act(self, registry: ModeRegistry) -> np.ndarray:
        """Embed the element into the full mode space of the registry."""
        ins, outs, local = self.transfer()
        u = np.eye(len(registry), dtype=complex)
        i = [registry.index(m) for m in ins]
        o = [registry.index(m) for m in outs]
        if set(ins) == set(outs):
            u[np.ix_(o, i)] = local
        elif {m.spatial for m in ins}.isdisjoint(m.spatial for m in outs):
            # vacuum output rails are sent back to the inputs
            u[np.ix_(i, i)] = 0
            u[np.ix_(o, o)] = 0
            u[np.ix_(o, i)] = local
            u[np.ix_(i, o)] = local.conj().T
        else:
            raise DomainError(f"{self.kind} partially overlaps its input and output rails")
        return u


@dataclass(frozen=True)
class PBS(OpticalElement):
    """Polarizing beam splitter: H transmits, V reflects, no phase on either."""

    inputs: Tuple[str, str]
    outputs: Tuple[str, str]
    kind: ClassVar[str] = "PBS"

    def transfer(self):
        (a, b), (c, d) = self.inputs, self.outputs
        ins = [H(a), V(a), H(b), V(b)]
        outs = [H(c), V(c), H(d), V(d)]
        t = np.zeros((4, 4), dtype=complex)
        t[0, 0] = 1  # Ha -> Hc
        t[3, 1] = 1  # Va -> Vd
        t[2, 2] = 1  # Hb -> Hd
        t[1, 3] = 1  # Vb -> Vc
        return ins, outs, t

    def params(self):
        return {"inputs": list(self.inputs), "outputs": list(self.outputs)}


@dataclass(frozen=True)
class BS(OpticalElement):
    """Balanced beam splitter; the second input picks up the minus sign."""

    inputs: Tuple[str, str]
    outputs: Tuple[str, str]
    kind: ClassVar[str] = "BS"

    def transfer(self):
        (a, b), (c, d) = self.inputs, self.outputs
        ins = [H(a), V(a), H(b), V(b)]
        outs = [H(c), V(c), H(d), V(d)]
        t = np.zeros((4, 4), dtype=complex)
        for p in (0, 1):
            t[p, p] = t[2 + p, p] = SQRT_HALF
            t[p, 2 + p] = SQRT_HALF
            t[2 + p, 2 + p] = -SQRT_HALF
        return ins, outs, t

    def params(self):
        return {"inputs": list(self.inputs), "outputs": list(self.outputs)}


@dataclass(frozen=True)
class HWP(OpticalElement):
    spatial: str
    theta: float
    kind: ClassVar[str] = "HWP"

    @classmethod
    def degrees(cls, spatial: str, angle: float) -> "HWP":
        return cls(spatial, math.radians(angle))

    def transfer(self):
        modes = [H(self.spatial), V(self.spatial)]
        return modes, modes, hwp_matrix(self.theta)

    def params(self):
        return {"spatial": self.spatial, "theta": self.theta}


@dataclass(frozen=True)
class PhaseShift(OpticalElement):
    mode: Mode
    phi: float
    kind: ClassVar[str] = "PhaseShift"

    def transfer(self):
        return [self.mode], [self.mode], np.array([[np.exp(1j * self.phi)]])

    def params(self):
        return {"spatial": self.mode.spatial, "pol": self.mode.pol.value, "phi": self.phi}


ELEMENT_KINDS = {cls.kind: cls for cls in (PBS, BS, HWP, PhaseShift)}


def element_from_params(kind: str, params: Mapping[str, object]) -> OpticalElement:
    if kind not in ELEMENT_KINDS:
        raise DomainError(f"unknown element kind {kind!r}")
    if kind in ("PBS", "BS"):
        return ELEMENT_KINDS[kind](tuple(params["inputs"]), tuple(params["outputs"]))
    if kind == "HWP":
        return HWP(str(params["spatial"]), float(params["theta"]))
    return PhaseShift(Mode(str(params["spatial"]), Pol(params["pol"])), float(params["phi"]))


@dataclass(frozen=True)
class Checkpoint:
    name: str


Step = Union[OpticalElement, Checkpoint]


@dataclass(frozen=True)
class Network:
    """
    Ordered elements with optional named checkpoints between them.

    The registry holds the declared ports followed by every rail the
    elements touch, in order of first use.
    """

    steps: Tuple[Step, ...]
    ports: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "ports", tuple(self.ports))

    @functools.cached_property
    def registry(self) -> ModeRegistry:
        labels = list(self.ports)
        for element in self.elements:
            labels.extend(element.labels)
        return ModeRegistry(labels)

    @property
    def elements(self) -> Tuple[OpticalElement, ...]:
        return tuple(s for s in self.steps if isinstance(s, OpticalElement))

    @property
    def checkpoints(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.steps if isinstance(s, Checkpoint))


@functools.lru_cache(maxsize=128)
def _compile_segments(net: Network) -> Tuple[Tuple[Tuple[str, np.ndarray], ...], np.ndarray]:
    registry = net.registry
    total = np.eye(len(registry), dtype=complex)
    marks = []
    for step in net.steps:
        if isinstance(step, Checkpoint):
            marks.append((step.name, total.copy()))
        else:
            total = step.act(registry) @ total
    if not is_unitary(total, UNITARY_ATOL):
        raise ConsistencyError("compiled network is not unitary")
    return tuple(marks), total


def compile_network(net: Network) -> np.ndarray:
    """Single-particle unitary of the whole network (M x M)."""
    return _compile_segments(net)[1]


def compile_elements(elements: Sequence[OpticalElement], registry: ModeRegistry) -> np.ndarray:
    total = np.eye(len(registry), dtype=complex)
    for element in elements:
        total = element.act(registry) @ total
    return total


# ==================== Photon states ====================

def apply_single_particle(amps: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    for axis in range(amps.ndim):
        amps = np.moveaxis(np.tensordot(matrix, amps, axes=([1], [axis])), 0, axis)
    return amps


@dataclass(frozen=True)
class JointPhotonState:
    """Rank-N amplitude tensor; axis k is photon k over the registry's modes."""

    registry: ModeRegistry
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex, copy=True)
        m = len(self.registry)
        if amps.ndim == 0 or any(n != m for n in amps.shape):
            raise DomainError(f"amplitude tensor shape {amps.shape} does not match {m} modes")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > ATOL:
            raise DomainError(f"photon state is not normalized (norm {norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def photons(self) -> int:
        return self.amps.ndim

    @classmethod
    def from_terms(cls, registry: ModeRegistry, terms: Mapping[Tuple[Mode, ...], complex]) -> "JointPhotonState":
        if not terms:
            raise DomainError("a photon state needs at least one term")
        photons = {len(k) for k in terms}
        if len(photons) != 1:
            raise DomainError("every term must place the same number of photons")
        amps = np.zeros((len(registry),) * photons.pop(), dtype=complex)
        for modes, amp in terms.items():
            amps[tuple(registry.index(m) for m in modes)] += amp
        return cls(registry, amps)

    def amplitude(self, *modes: Mode) -> complex:
        return complex(self.amps[tuple(self.registry.index(m) for m in modes)])

    def terms(self, tol: float = ZERO_ATOL) -> Dict[Tuple[Mode, ...], complex]:
        """Nonzero entries keyed by per-photon modes."""
        out = {}
        for idx in zip(*np.nonzero(np.abs(self.amps) > tol)):
            out[tuple(self.registry.modes[i] for i in idx)] = complex(self.amps[idx])
        return out


def inject(registry: ModeRegistry, modes: Sequence[Mode]) -> JointPhotonState:
    """Product state with photon k in modes[k]."""
    return JointPhotonState.from_terms(registry, {tuple(modes): 1.0})


def evolve(state: JointPhotonState, unitary: np.ndarray) -> JointPhotonState:
    m = len(state.registry)
    if unitary.shape != (m, m):
        raise DomainError(f"unitary shape {unitary.shape} does not match {m} modes")
    return JointPhotonState(state.registry, apply_single_particle(state.amps, unitary))


def checkpoint_states(net: Network, state: JointPhotonState) -> List[Tuple[str, JointPhotonState]]:
    if state.registry != net.registry:
        raise DomainError("input state is not defined over the network's modes")
    marks, _ = _compile_segments(net)
    return [(name, evolve(state, partial)) for name, partial in marks]


def relabel(state: JointPhotonState, mapping: Mapping[Mode, Mode], target: ModeRegistry) -> JointPhotonState:
    """
    Move amplitude from source modes to target modes (heralded routing).

    Amplitude on unmapped modes must already be negligible.
    """
    targets = list(mapping.values())
    if len(set(targets)) != len(targets):
        raise DomainError("routing must not merge two modes into one")
    r = np.zeros((len(target), len(state.registry)), dtype=complex)
    for src, dst in mapping.items():
        if src in state.registry:
            r[target.index(dst), state.registry.index(src)] = 1
    amps = apply_single_particle(state.amps, r)
    kept = float(np.vdot(amps, amps).real)
    if 1.0 - kept > ATOL:
        raise SchemeIntegrityError(f"routing drops {1.0 - kept:.3g} of the accepted amplitude")
    return JointPhotonState(target, amps / math.sqrt(kept))


# ==================== Post-selection ====================

@dataclass(frozen=True)
class Branch:
    """
    One coincidence pattern: one slot per photon, slots pairwise disjoint.

    ``recombine`` elements run on acceptance, before any feed-forward.
    """

    label: str
    slots: Tuple[FrozenSet[Mode], ...]
    recombine: Tuple[OpticalElement, ...] = ()

    def __post_init__(self):
        slots = tuple(frozenset(s) for s in self.slots)
        for k, first in enumerate(slots):
            for second in slots[k + 1:]:
                if first & second:
                    raise DomainError(f"branch {self.label}: acceptance slots overlap")
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "recombine", tuple(self.recombine))

    @property
    def live(self) -> FrozenSet[str]:
        labels = {m.spatial for slot in self.slots for m in slot}
        for element in self.recombine:
            labels.update(element.labels)
        return frozenset(labels)

    def accept_mask(self, registry: ModeRegistry, photons: int) -> np.ndarray:
        if len(self.slots) != photons:
            raise DomainError(f"branch {self.label} has {len(self.slots)} slots for {photons} photons")
        slot_of = np.full(len(registry), -1)
        for k, slot in enumerate(self.slots):
            for mode in slot:
                slot_of[registry.index(mode)] = k
        bits = np.where(slot_of >= 0, np.left_shift(1, np.maximum(slot_of, 0)), 0)
        total = np.zeros((1,) * photons, dtype=np.int64)
        for axis in range(photons):
            shape = [1] * photons
            shape[axis] = len(registry)
            total = total | bits.reshape(shape)
        return total == (1 << photons) - 1


@dataclass(frozen=True)
class PostSelection:
    branches: Tuple[Branch, ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(b.label for b in self.branches)

    def accepted_mask(self, registry: ModeRegistry, photons: int) -> np.ndarray:
        """Configurations that fire at least one branch."""
        mask = np.zeros((len(registry),) * photons, dtype=bool)
        for branch in self.branches:
            mask |= branch.accept_mask(registry, photons)
        return mask

    def is_exclusive(self, registry: ModeRegistry, photons: int) -> bool:
        """True when no configuration fires two branches at once."""
        hits = np.zeros((len(registry),) * photons, dtype=np.int64)
        for branch in self.branches:
            hits += branch.accept_mask(registry, photons)
        return bool(np.all(hits <= 1))


@dataclass(frozen=True)
class FeedForwardRule:
    corrections: Mapping[str, Tuple[OpticalElement, ...]] = field(default_factory=dict)

    def __hash__(self) -> int:
        return hash(tuple(sorted((k, tuple(v)) for k, v in self.corrections.items())))

    def for_branch(self, label: str) -> Tuple[OpticalElement, ...]:
        return tuple(self.corrections.get(label, ()))


@dataclass(frozen=True)
class ConditionalResult:
    label: str
    probability: float
    state: Optional[JointPhotonState]
    live: FrozenSet[str] = frozenset()


def project(state: JointPhotonState, branch: Branch) -> np.ndarray:
    """Unnormalized accepted amplitudes of a branch, recombination applied."""
    mask = branch.accept_mask(state.registry, state.photons)
    amps = np.where(mask, state.amps, 0)
    if branch.recombine:
        amps = apply_single_particle(amps, compile_elements(branch.recombine, state.registry))
    return amps


def post_select(state: JointPhotonState, rule: PostSelection) -> List[ConditionalResult]:
    """
    Per-pattern branch probabilities and conditional states.

    Branches sharing a rail (the 1' rail of a P-SWAP) each count the shared
    events, so the sum may exceed 1 off the logical encoding; for exclusive
    rules it never does. accepted_probability counts every event once.
    """
    results = []
    for branch in rule.branches:
        amps = project(state, branch)
        probability = float(np.vdot(amps, amps).real)
        if probability < ZERO_ATOL:
            results.append(ConditionalResult(branch.label, 0.0, None, branch.live))
            continue
        conditional = JointPhotonState(state.registry, amps / math.sqrt(probability))
        results.append(ConditionalResult(branch.label, probability, conditional, branch.live))
    total = sum(r.probability for r in results)
    if total > 1 + ATOL and rule.is_exclusive(state.registry, state.photons):
        raise ConsistencyError(f"exclusive branches sum to {total:.12g} > 1")
    logger.debug("post-selected %d branches, per-pattern probability %.6g", len(results), total)
    return results


def accepted_probability(state: JointPhotonState, rule: PostSelection) -> float:
    """Probability that at least one branch fires."""
    mask = rule.accepted_mask(state.registry, state.photons)
    return float(np.sum(np.abs(state.amps[mask]) ** 2))


def apply_feed_forward(result: ConditionalResult, rules: FeedForwardRule) -> ConditionalResult:
    elements = rules.for_branch(result.label)
    for element in elements:
        dead = set(element.labels) - result.live
        if dead:
            raise DomainError(f"feed-forward for branch {result.label} acts on dead rails {sorted(dead)}")
    if not elements or result.state is None:
        return result
    unitary = compile_elements(elements, result.state.registry)
    return replace(result, state=evolve(result.state, unitary))
