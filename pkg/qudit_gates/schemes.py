"""
Linear-optical P-SWAP, CNOT and three-photon Toffoli schemes.

A scheme is an ordered list of heralded stages. Each stage evolves the
photons through its network, keeps the listed coincidence branches, applies
branch-conditioned corrections and routes the surviving rails into the
input ports of the next stage. Every branch is evaluated independently, so
a path's probability is the product of its conditional branch
probabilities.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConsistencyError, DomainError, SchemeIntegrityError
from .optics import (
    BS,
    HWP,
    PBS,
    Branch,
    Checkpoint,
    FeedForwardRule,
    H,
    JointPhotonState,
    Mode,
    Network,
    PhaseShift,
    PostSelection,
    Step,
    V,
    apply_feed_forward,
    apply_single_particle,
    compile_elements,
    compile_network,
    evolve,
    post_select,
    relabel,
)
from .qudit import ATOL, ZERO_ATOL, PureState, SiteDims, basis_state, states_equal
from .synthesis import gate_pswap, ideal_cnot, ideal_toffoli

logger = logging.getLogger(__name__)

ALL_BRANCHES = (("9", "12"), ("10", "12"), ("9", "11"), ("10", "11"))
TWELVE_BRANCHES = ALL_BRANCHES[:2]


# ==================== P-SWAP building block ====================

def pswap_block(ns: str, qutrit: str, qutrit_aux: str, qubit: str) -> Tuple[Step, ...]:
    """
    Optical P-SWAP between a dual-rail qutrit and a polarization qubit.

    ``qutrit`` carries levels 0/1 as H/V, ``qutrit_aux`` carries level 2 as V.
    Internal rails are prefixed with ``ns``; outputs are rails 9-12 and 1'.
    """
    r = lambda label: f"{ns}{label}"  # noqa: E731
    return (
        PBS((qutrit, r("d1")), (r("1"), r("2"))),
        HWP.degrees(r("1"), 45),
        HWP.degrees(r("2"), 45),
        PBS((qubit, r("d2")), (r("3"), r("4"))),
        HWP.degrees(r("3"), 22.5),
        HWP.degrees(r("4"), 67.5),
        Checkpoint(r("split")),
        BS((qutrit_aux, r("d3")), (r("1'"), r("1''"))),
        PBS((r("2"), r("4")), (r("6"), r("5"))),
        PBS((r("1"), r("3")), (r("8"), r("7"))),
        HWP.degrees(r("5"), 22.5),
        HWP.degrees(r("6"), 22.5),
        HWP.degrees(r("7"), 67.5),
        HWP.degrees(r("8"), 67.5),
        Checkpoint(r("mix")),
        PBS((r("8"), r("5")), (r("9"), r("10"))),
        PBS((r("7"), r("6")), (r("11"), r("12"))),
        HWP.degrees(r("10"), 45),
        HWP.degrees(r("12"), 45),
        Checkpoint(r("out")),
    )


def rail(label: str) -> FrozenSet[Mode]:
    return frozenset({H(label), V(label)})


def qutrit_slot(main: str, aux: str) -> FrozenSet[Mode]:
    return frozenset({H(main), V(main), V(aux)})


def pswap_branches(
    ns: str,
    which: Sequence[Tuple[str, str]] = ALL_BRANCHES,
    spectators: Sequence[FrozenSet[Mode]] = (),
    recombine: Optional[Tuple[str, str]] = None,
) -> Tuple[Branch, ...]:
    """
    Coincidence branches "i-j" of a P-SWAP block: one photon in rail i or 1',
    one in rail j, spectators in their own rails. With ``recombine`` the
    rails i and 1' are merged by a PBS into (merged, leak).
    """
    branches = []
    for i, j in which:
        merge = ()
        if recombine:
            merge = (PBS((f"{ns}{i}", f"{ns}1'"), recombine),)
        slots = (qutrit_slot(f"{ns}{i}", f"{ns}1'"), rail(f"{ns}{j}")) + tuple(spectators)
        branches.append(Branch(f"{i}-{j}", slots, merge))
    return tuple(branches)


def _rail_routes(pairs: Mapping[str, str]) -> Dict[Mode, Mode]:
    routes = {}
    for src, dst in pairs.items():
        routes[H(src)] = H(dst)
        routes[V(src)] = V(dst)
    return routes


# ==================== Descriptors ====================

@dataclass(frozen=True)
class SchemeStage:
    name: str
    network: Network
    post_selection: PostSelection
    feed_forward: FeedForwardRule = field(default_factory=FeedForwardRule)
    routes: Mapping[str, Mapping[Mode, Mode]] = field(default_factory=dict)


@dataclass(frozen=True)
class LogicalEncoding:
    """
    Logical register <-> photon modes.

    ``encode[k]`` places photon k for each level of logical site k.
    ``decode[label][k]`` reads logical site k off the rails of an accepted
    final-stage branch; it may reach levels above ``dims`` (leak levels),
    bounded by ``output_dims``.
    """

    dims: SiteDims
    encode: Tuple[Mapping[int, Mode], ...]
    decode: Mapping[str, Tuple[Mapping[Mode, int], ...]]
    output_dims: SiteDims

    def __post_init__(self):
        dims, out = SiteDims.of(self.dims), SiteDims.of(self.output_dims)
        if len(self.encode) != len(dims) or len(out) != len(dims):
            raise DomainError("encoding needs one photon per logical site")
        for site, table in enumerate(self.encode):
            if sorted(table) != list(range(dims[site])) or len(set(table.values())) != len(table):
                raise DomainError(f"encode table of site {site} is not a bijection on its levels")
        for label, tables in self.decode.items():
            if len(tables) != len(dims):
                raise DomainError(f"decode table {label} must cover every site")
            seen = set()
            for site, table in enumerate(tables):
                if len(set(table.values())) != len(table) or any(not 0 <= lv < out[site] for lv in table.values()):
                    raise DomainError(f"decode table {label} site {site} is not a bijection onto its levels")
                if seen & set(table):
                    raise DomainError(f"decode table {label} reuses a mode across sites")
                seen |= set(table)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "output_dims", out)

    def to_photons(self, state: PureState, registry) -> JointPhotonState:
        if state.dims != self.dims:
            raise DomainError(f"input dims {state.dims.dims} do not match encoding dims {self.dims.dims}")
        amps = np.zeros((len(registry),) * len(self.dims), dtype=complex)
        for index, amp in enumerate(state.amps):
            if amp == 0:
                continue
            levels = self.dims.levels_of(index)
            modes = tuple(self.encode[site][lv] for site, lv in enumerate(levels))
            amps[tuple(registry.index(m) for m in modes)] += amp
        return JointPhotonState(registry, amps)

    def to_logical(self, label: str, amps: np.ndarray, registry) -> np.ndarray:
        """Decoded (unnormalized) amplitudes of an accepted final-stage tensor."""
        tables = self.decode[label]
        site_of = {}
        for site, table in enumerate(tables):
            for mode, level in table.items():
                site_of[mode] = (site, level)
        out = np.zeros(self.output_dims.size, dtype=complex)
        escaped = 0.0
        for idx in zip(*np.nonzero(np.abs(amps) > ZERO_ATOL)):
            amp = amps[idx]
            hits = [site_of.get(registry.modes[i]) for i in idx]
            sites = [h[0] for h in hits if h is not None]
            if None in hits or sorted(sites) != list(range(len(tables))):
                escaped += abs(amp) ** 2
                continue
            levels = [0] * len(tables)
            for site, level in hits:
                levels[site] = level
            out[self.output_dims.index_of(levels)] += amp
        if escaped > ATOL:
            raise SchemeIntegrityError(f"branch {label}: {escaped:.3g} of the accepted amplitude is not decodable")
        return out


@dataclass(frozen=True)
class SchemePath:
    branches: Tuple[str, ...]
    probability: float
    state: Optional[JointPhotonState] = None


@dataclass(frozen=True)
class SchemeDescriptor:
    name: str
    stages: Tuple[SchemeStage, ...]
    encoding: LogicalEncoding
    expected_success: Fraction
    ideal: np.ndarray = field(repr=False, compare=False)

    @property
    def network(self) -> Network:
        return self.stages[0].network

    @property
    def post_selection(self) -> PostSelection:
        return self.stages[-1].post_selection

    @property
    def feed_forward(self) -> FeedForwardRule:
        return self.stages[-1].feed_forward

    def without_feed_forward(self) -> "SchemeDescriptor":
        stages = tuple(replace(s, feed_forward=FeedForwardRule()) for s in self.stages)
        return replace(self, name=f"{self.name}-no-feed-forward", stages=stages)

    @functools.cached_property
    def transfer_maps(self) -> Dict[Tuple[str, ...], np.ndarray]:
        return transfer(self)


# ==================== Evaluation ====================

def propagate(scheme: SchemeDescriptor, state: JointPhotonState) -> List[SchemePath]:
    """Every accepted path through the stages with its probability and final state."""
    frontier = [SchemePath((), 1.0, state)]
    last = len(scheme.stages) - 1
    for position, stage in enumerate(scheme.stages):
        unitary = compile_network(stage.network)
        grown = []
        for path in frontier:
            if path.state is None:
                grown.extend(SchemePath(path.branches + (label,), 0.0) for label in stage.post_selection.labels)
                continue
            evolved = evolve(path.state, unitary)
            for result in post_select(evolved, stage.post_selection):
                result = apply_feed_forward(result, stage.feed_forward)
                labels = path.branches + (result.label,)
                if result.state is None:
                    grown.append(SchemePath(labels, 0.0))
                    continue
                conditional = result.state
                if position < last:
                    target = scheme.stages[position + 1].network.registry
                    conditional = relabel(conditional, stage.routes[result.label], target)
                grown.append(SchemePath(labels, path.probability * result.probability, conditional))
        frontier = grown
    logger.debug("%s: %d paths through %d stages", scheme.name, len(frontier), len(scheme.stages))
    return frontier


def transfer(scheme: SchemeDescriptor) -> Dict[Tuple[str, ...], np.ndarray]:
    """
    Per-path linear maps from logical input amplitudes to decoded outputs.

    Column k holds the unnormalized decoded output of logical basis state k,
    so a path's probability for input psi is the squared norm of map @ psi.
    """
    enc = scheme.encoding
    registry = scheme.network.registry
    last_registry = scheme.stages[-1].network.registry
    maps: Dict[Tuple[str, ...], np.ndarray] = {}
    for k in range(enc.dims.size):
        joint = enc.to_photons(basis_state(enc.dims, enc.dims.levels_of(k)), registry)
        for path in propagate(scheme, joint):
            column = maps.setdefault(path.branches, np.zeros((enc.output_dims.size, enc.dims.size), dtype=complex))
            if path.state is not None:
                amps = path.state.amps * math.sqrt(path.probability)
                column[:, k] = enc.to_logical(path.branches[-1], amps, last_registry)
    logger.info("%s: built transfer maps for %d paths", scheme.name, len(maps))
    return maps


@dataclass(frozen=True)
class PathOutcome:
    branches: Tuple[str, ...]
    probability: float

    @property
    def label(self) -> str:
        return " > ".join(self.branches)


@dataclass(frozen=True)
class GateRunReport:
    input: PureState
    success_probability: float
    conditional_output: PureState
    fidelity_vs_ideal: float
    leakage: float = 0.0
    paths: Tuple[PathOutcome, ...] = ()


def _logical_indices(dims: SiteDims, output_dims: SiteDims) -> List[int]:
    return [
        output_dims.index_of(levels)
        for levels in itertools.product(*(range(d) for d in dims))
    ]


def run_gate(scheme: SchemeDescriptor, state: PureState) -> GateRunReport:
    """
    Run one logical input through the scheme.

    All accepted paths must decode to the same logical state up to a
    global phase; otherwise the scheme is reported as inconsistent.
    """
    enc = scheme.encoding
    if state.dims != enc.dims:
        raise DomainError(f"input dims {state.dims.dims} do not match scheme dims {enc.dims.dims}")

    # 1. Per-path decoded outputs
    paths, accepted = [], []
    for branches, matrix in scheme.transfer_maps.items():
        out = matrix @ state.amps
        probability = float(np.vdot(out, out).real)
        paths.append(PathOutcome(branches, probability))
        if probability > ZERO_ATOL:
            accepted.append((branches, PureState(enc.output_dims, out / math.sqrt(probability))))
    if not accepted:
        raise SchemeIntegrityError(f"{scheme.name}: no accepted path for this input")

    # 2. Branch unanimity
    reference_branches, reference = accepted[0]
    for branches, decoded in accepted[1:]:
        if not states_equal(reference, decoded, up_to_global_phase=True):
            raise SchemeIntegrityError(
                f"{scheme.name}: paths {' > '.join(reference_branches)} and "
                f"{' > '.join(branches)} decode to different outputs"
            )

    # 3. Leakage and fidelity on the logical register
    logical = _logical_indices(enc.dims, enc.output_dims)
    inside = reference.amps[logical]
    kept = float(np.vdot(inside, inside).real)
    if kept < ATOL:
        raise SchemeIntegrityError(f"{scheme.name}: output leaves the logical register")
    outside = np.delete(reference.amps, logical)
    leaked = float(np.vdot(outside, outside).real)
    ideal = scheme.ideal @ state.amps
    fidelity = float(abs(np.vdot(ideal, inside)) ** 2)
    return GateRunReport(
        input=state,
        success_probability=sum(p.probability for p in paths),
        conditional_output=PureState(enc.dims, inside / math.sqrt(kept)),
        fidelity_vs_ideal=min(1.0, fidelity),
        leakage=leaked,
        paths=tuple(paths),
    )


# ==================== Schemes ====================

def _eleven(labels: Sequence[str]) -> Tuple[str, ...]:
    return tuple(label for label in labels if label.endswith("-11"))


def _keep(spectators: Mapping[str, Optional[str]]) -> Dict[Mode, Mode]:
    """Identity routes for rails that sit out a stage."""
    routes = _rail_routes({main: main for main in spectators})
    for aux in spectators.values():
        if aux:
            routes[V(aux)] = V(aux)
    return routes


def _spectator_slots(spectators: Mapping[str, Optional[str]]) -> Tuple[FrozenSet[Mode], ...]:
    return tuple(qutrit_slot(main, aux) if aux else rail(main) for main, aux in spectators.items())


def _spectator_ports(spectators: Mapping[str, Optional[str]]) -> Tuple[str, ...]:
    return tuple(spectators) + tuple(aux for aux in spectators.values() if aux)


@functools.cache
def scheme_pswap() -> SchemeDescriptor:
    """Single-stage P-SWAP between a dual-rail qutrit (photon 1) and a qubit (photon 2)."""
    branches = pswap_branches("")
    stage = SchemeStage(
        name="pswap",
        network=Network(pswap_block("", "1_in", "1'_in", "2_in"), ports=("1_in", "1'_in", "2_in")),
        post_selection=PostSelection(branches),
        feed_forward=FeedForwardRule(
            {label: (PhaseShift(V("1'"), math.pi),) for label in _eleven([b.label for b in branches])}
        ),
    )
    decode = {
        f"{i}-{j}": ({H(i): 0, V(i): 1, V("1'"): 2}, {H(j): 0, V(j): 1})
        for i, j in ALL_BRANCHES
    }
    encoding = LogicalEncoding(
        dims=SiteDims((3, 2)),
        encode=({0: H("1_in"), 1: V("1_in"), 2: V("1'_in")}, {0: H("2_in"), 1: V("2_in")}),
        decode=decode,
        output_dims=SiteDims((3, 2)),
    )
    return SchemeDescriptor("pswap", (stage,), encoding, Fraction(1, 2), gate_pswap(3, 2).matrix)


def cnot_stages(
    control: str,
    target: str,
    ns: Tuple[str, str] = ("a.", "b."),
    spectators: Optional[Mapping[str, Optional[str]]] = None,
    merged: Tuple[str, str] = ("cm", "cx"),
    routes_out: Optional[Tuple[str, str]] = None,
) -> Tuple[SchemeStage, SchemeStage]:
    """
    The two heralded halves of the optical CNOT.

    The first half widens the control with a PBS, rotates the target and
    keeps only the rail-12 branches of its P-SWAP. The second half applies
    the 0-degree plate, a second P-SWAP, rotates the target back and merges
    the control rails into ``merged`` = (control, leak); rail-11 branches
    are corrected with a 0-degree plate on the merged control.
    ``routes_out`` = (control, target) routes the result onward.
    """
    a, b = ns
    spectators = dict(spectators or {})
    slots = _spectator_slots(spectators)
    extra = _spectator_ports(spectators)
    main, leak = merged

    first = SchemeStage(
        name=f"{a}cnot",
        network=Network(
            (PBS((control, f"{a}d0"), (f"{a}1_in", f"{a}1'_in")), HWP.degrees(target, 22.5))
            + pswap_block(a, f"{a}1_in", f"{a}1'_in", target),
            ports=(control, target) + extra,
        ),
        post_selection=PostSelection(pswap_branches(a, TWELVE_BRANCHES, slots)),
        routes={
            f"{i}-{j}": {
                **_rail_routes({f"{a}{i}": "ctl", f"{a}{j}": "tgt"}),
                V(f"{a}1'"): V("ctl'"),
                **_keep(spectators),
            }
            for i, j in TWELVE_BRANCHES
        },
    )

    branches = pswap_branches(b, ALL_BRANCHES, slots, recombine=merged)
    routes = {}
    if routes_out:
        out_control, out_target = routes_out
        routes = {
            f"{i}-{j}": {**_rail_routes({main: out_control, f"{b}{j}": out_target}), **_keep(spectators)}
            for i, j in ALL_BRANCHES
        }
    second = SchemeStage(
        name=f"{b}cnot",
        network=Network(
            (HWP.degrees("tgt", 0),)
            + pswap_block(b, "ctl", "ctl'", "tgt")
            + (HWP.degrees(f"{b}11", 22.5), HWP.degrees(f"{b}12", 22.5)),
            ports=("ctl", "ctl'", "tgt") + extra + merged,
        ),
        post_selection=PostSelection(branches),
        feed_forward=FeedForwardRule(
            {label: (HWP.degrees(main, 0),) for label in _eleven([br.label for br in branches])}
        ),
        routes=routes,
    )
    return first, second


@functools.cache
def scheme_cnot() -> SchemeDescriptor:
    """Two-photon CNOT, photon 1 control, photon 2 target."""
    stages = cnot_stages("1", "2")
    decode = {
        f"{i}-{j}": ({H("cm"): 0, V("cm"): 1, V("cx"): 2}, {H(f"b.{j}"): 0, V(f"b.{j}"): 1})
        for i, j in ALL_BRANCHES
    }
    encoding = LogicalEncoding(
        dims=SiteDims((2, 2)),
        encode=({0: H("1"), 1: V("1")}, {0: H("2"), 1: V("2")}),
        decode=decode,
        output_dims=SiteDims((3, 2)),
    )
    return SchemeDescriptor("cnot", stages, encoding, Fraction(1, 8), ideal_cnot())


@functools.cache
def scheme_toffoli() -> SchemeDescriptor:
    """
    Three-photon Toffoli: photons 1, 2, 3 are c1, c2 and the target.

    Stages: P-SWAP(c1, c2) with c2 widened, the two CNOT(c1, t) halves,
    then P-SWAP(c1, c2) again with the c2 rails merged.
    """
    enter_branches = pswap_branches("p.", ALL_BRANCHES, (rail("3"),))
    enter = SchemeStage(
        name="p.pswap",
        network=Network(
            (PBS(("2", "p.d0"), ("p.1_in", "p.1'_in")),) + pswap_block("p.", "p.1_in", "p.1'_in", "1"),
            ports=("1", "2", "3"),
        ),
        post_selection=PostSelection(enter_branches),
        feed_forward=FeedForwardRule(
            {label: (PhaseShift(V("p.1'"), math.pi),) for label in _eleven([b.label for b in enter_branches])}
        ),
        routes={
            f"{i}-{j}": {
                **_rail_routes({f"p.{i}": "c2", f"p.{j}": "c1", "3": "t"}),
                V("p.1'"): V("c2'"),
            }
            for i, j in ALL_BRANCHES
        },
    )
    cnot_a, cnot_b = cnot_stages(
        "c1", "t", ns=("q.", "r."), spectators={"c2": "c2'"}, merged=("c1m", "c1x"), routes_out=("c1", "t")
    )
    leave = SchemeStage(
        name="s.pswap",
        network=Network(pswap_block("s.", "c2", "c2'", "c1"), ports=("c2", "c2'", "c1", "t", "c2m", "c2x")),
        post_selection=PostSelection(pswap_branches("s.", TWELVE_BRANCHES, (rail("t"),), recombine=("c2m", "c2x"))),
    )
    decode = {
        f"{i}-{j}": (
            {H(f"s.{j}"): 0, V(f"s.{j}"): 1},
            {H("c2m"): 0, V("c2m"): 1, V("c2x"): 2},
            {H("t"): 0, V("t"): 1},
        )
        for i, j in TWELVE_BRANCHES
    }
    encoding = LogicalEncoding(
        dims=SiteDims((2, 2, 2)),
        encode=({0: H("1"), 1: V("1")}, {0: H("2"), 1: V("2")}, {0: H("3"), 1: V("3")}),
        decode=decode,
        output_dims=SiteDims((2, 3, 2)),
    )
    return SchemeDescriptor(
        "toffoli", (enter, cnot_a, cnot_b, leave), encoding, Fraction(1, 64), ideal_toffoli(2)
    )


def scheme_toffoli_n(n: int) -> SchemeDescriptor:
    """(n+1)-photon Toffoli; no element list exists for it yet."""
    raise NotImplementedError(f"no optical network is defined for a {n}-control Toffoli")


SCHEMES = {
    "pswap": scheme_pswap,
    "cnot": scheme_cnot,
    "toffoli": scheme_toffoli,
}


def get_scheme(name: str) -> SchemeDescriptor:
    try:
        return SCHEMES[name]()
    except KeyError:
        raise DomainError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None


# ==================== Coincidence table ====================

TABLE_INPUTS = (
    ("H1H2", (0, 0)),
    ("H1V2", (0, 1)),
    ("V1H2", (1, 0)),
    ("V1V2", (1, 1)),
    ("V1'H2", (2, 0)),
    ("V1'V2", (2, 1)),
)


def _detector_pairs(i: str, j: str) -> Tuple[Tuple[Mode, Mode], ...]:
    return (
        (H(i), H(j)),
        (V(i), H(j)),
        (H(i), V(j)),
        (V(i), V(j)),
        (V("1'"), H(j)),
        (V("1'"), V(j)),
    )


@dataclass(frozen=True)
class CoincidenceTable:
    """
    Two-fold coincidence expectations for the six logical basis inputs.

    ``signed`` carries the sign of the amplitude before feed-forward;
    ``corrected`` is the same table after the branch corrections.
    """

    inputs: Tuple[str, ...]
    columns: Tuple[str, ...]
    signed: np.ndarray = field(repr=False)
    corrected: np.ndarray = field(repr=False)


def coincidence_value(amps: np.ndarray, registry, x: Mode, y: Mode) -> float:
    """
    Probability of one photon in x and the other in y, signed by the amplitude.

    The photons are distinguishable, so both orderings add in probability.
    """
    ix, iy = registry.index(x), registry.index(y)
    pair = np.array([amps[ix, iy], amps[iy, ix]])
    probability = float(np.sum(np.abs(pair) ** 2))
    if probability < ZERO_ATOL:
        return 0.0
    if np.max(np.abs(pair.imag)) > ATOL:
        raise ConsistencyError(f"coincidence amplitude for {x}&{y} is not real")
    signs = {float(np.sign(a.real)) for a in pair if abs(a) > ATOL}
    if len(signs) != 1:
        raise ConsistencyError(f"photon orderings for {x}&{y} disagree in sign")
    return signs.pop() * probability


def coincidence_table(scheme: SchemeDescriptor) -> CoincidenceTable:
    if scheme.name != "pswap" or len(scheme.stages) != 1:
        raise DomainError(f"coincidence tables are only defined for the pswap scheme, not {scheme.name!r}")
    stage = scheme.stages[0]
    registry = stage.network.registry
    unitary = compile_network(stage.network)
    branches = stage.post_selection.branches
    columns = []
    for branch in branches:
        i, j = branch.label.split("-")
        columns.extend(f"{branch.label}:{x}&{y}" for x, y in _detector_pairs(i, j))
    signed = np.zeros((len(TABLE_INPUTS), len(columns)))
    corrected = np.zeros_like(signed)
    for row, (_, levels) in enumerate(TABLE_INPUTS):
        joint = scheme.encoding.to_photons(basis_state(scheme.encoding.dims, levels), registry)
        out = evolve(joint, unitary).amps
        for b, branch in enumerate(branches):
            fixed = apply_single_particle(out, compile_elements(stage.feed_forward.for_branch(branch.label), registry))
            i, j = branch.label.split("-")
            for q, (x, y) in enumerate(_detector_pairs(i, j)):
                signed[row, 6 * b + q] = coincidence_value(out, registry, x, y)
                corrected[row, 6 * b + q] = coincidence_value(fixed, registry, x, y)
    return CoincidenceTable(tuple(name for name, _ in TABLE_INPUTS), tuple(columns), signed, corrected)
