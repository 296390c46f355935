"""
Tests for the linear-optical simulator: elements, networks, photon states,
post-selection and feed-forward.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qudit_gates.errors import DomainError, SchemeIntegrityError
from qudit_gates.optics import (
    BS,
    HWP,
    PBS,
    Branch,
    Checkpoint,
    ConditionalResult,
    FeedForwardRule,
    H,
    JointPhotonState,
    Mode,
    ModeRegistry,
    Network,
    PhaseShift,
    Pol,
    PostSelection,
    V,
    accepted_probability,
    apply_feed_forward,
    checkpoint_states,
    compile_network,
    element_from_params,
    evolve,
    hwp_matrix,
    inject,
    post_select,
    relabel,
)
from qudit_gates.qudit import is_unitary, random_state
from qudit_gates.schemas import NetworkSchema
from qudit_gates.schemes import SCHEMES, rail, scheme_cnot, scheme_pswap

S = 1 / math.sqrt(2)


def column(element, registry, mode):
    """Image of a single mode under an element."""
    u = element.act(registry)
    image = u[:, registry.index(mode)]
    return {registry.modes[k]: image[k] for k in np.nonzero(np.abs(image) > 1e-12)[0]}


def photon(registry, terms):
    v = np.zeros(len(registry), dtype=complex)
    for mode, amp in terms.items():
        v[registry.index(mode)] += amp
    return v


def two_photon(registry, terms):
    """Sum of amplitude * (photon 1 vector) x (photon 2 vector)."""
    return sum(amp * np.multiply.outer(photon(registry, first), photon(registry, second))
               for amp, first, second in terms)


ALPHAS = np.array([0.3, -0.2 + 0.1j, 0.45j, 0.25, -0.35 - 0.2j, 0.5])
ALPHAS = ALPHAS / np.linalg.norm(ALPHAS)

# photon 1 per qutrit level, photon 2 per qubit level, at each P-SWAP checkpoint
PSWAP_STAGES = {
    "split": (
        ({V("1"): 1}, {H("2"): 1}, {V("1'_in"): 1}),
        ({H("3"): S, V("3"): S}, {H("4"): S, V("4"): S}),
    ),
    "mix": (
        ({H("7"): S, V("7"): S}, {H("6"): S, V("6"): S}, {V("1'"): S, V("1''"): S}),
        ({H("7"): -0.5, V("7"): 0.5, H("8"): 0.5, V("8"): 0.5},
         {H("5"): 0.5, V("5"): 0.5, H("6"): 0.5, V("6"): -0.5}),
    ),
    "out": (
        ({H("11"): S, H("12"): S}, {V("12"): S, V("11"): S}, {V("1'"): S, V("1''"): S}),
        ({H("11"): -0.5, H("12"): 0.5, H("9"): 0.5, H("10"): 0.5},
         {V("10"): 0.5, V("9"): 0.5, V("12"): 0.5, V("11"): -0.5}),
    ),
}
PSWAP_INPUT = (
    ({H("1_in"): 1}, {V("1_in"): 1}, {V("1'_in"): 1}),
    ({H("2_in"): 1}, {V("2_in"): 1}),
)


def pswap_state(registry, stage):
    qutrit, qubit = stage
    return two_photon(registry, [
        (ALPHAS[2 * c + t], qutrit[c], qubit[t]) for c in range(3) for t in range(2)
    ])


# ==================== Modes ====================

class TestModes:

    def test_registry_orders_h_before_v(self):
        registry = ModeRegistry(["a", "b", "a"])
        assert registry.labels == ("a", "b")
        assert registry.modes == (H("a"), V("a"), H("b"), V("b"))
        assert registry.index(V("b")) == 3

    def test_unknown_mode(self):
        with pytest.raises(DomainError):
            ModeRegistry(["a"]).index(H("z"))

    def test_mode_text(self):
        assert str(V("1'")) == "V1'"
        assert Mode.parse("V1'") == Mode("1'", Pol.V)
        assert Mode.parse("H12") == H("12")
        with pytest.raises(DomainError):
            Mode.parse("X1")


# ==================== Elements ====================

class TestElements:

    def test_hwp_angles(self):
        np.testing.assert_allclose(hwp_matrix(math.radians(45)), [[0, 1], [1, 0]], atol=1e-12)
        np.testing.assert_allclose(hwp_matrix(math.radians(22.5)), S * np.array([[1, 1], [1, -1]]), atol=1e-12)
        np.testing.assert_allclose(hwp_matrix(math.radians(67.5)), S * np.array([[-1, 1], [1, 1]]), atol=1e-12)
        np.testing.assert_allclose(hwp_matrix(0.0), [[1, 0], [0, -1]], atol=1e-12)

    def test_pbs_transmits_h_reflects_v(self):
        registry = ModeRegistry(["a", "b", "c", "d"])
        pbs = PBS(("a", "b"), ("c", "d"))
        assert column(pbs, registry, H("a")) == {H("c"): 1}
        assert column(pbs, registry, V("a")) == {V("d"): 1}
        assert column(pbs, registry, H("b")) == {H("d"): 1}
        assert column(pbs, registry, V("b")) == {V("c"): 1}
        assert is_unitary(pbs.act(registry))

    def test_bs_second_input_takes_the_sign(self):
        registry = ModeRegistry(["a", "b", "c", "d"])
        bs = BS(("a", "b"), ("c", "d"))
        image = column(bs, registry, V("a"))
        assert image[V("c")] == pytest.approx(S) and image[V("d")] == pytest.approx(S)
        image = column(bs, registry, H("b"))
        assert image[H("c")] == pytest.approx(S) and image[H("d")] == pytest.approx(-S)
        assert is_unitary(bs.act(registry))

    def test_in_place_elements(self):
        registry = ModeRegistry(["a"])
        assert column(HWP.degrees("a", 45), registry, H("a")) == pytest.approx({V("a"): 1})
        image = column(PhaseShift(V("a"), math.pi), registry, V("a"))
        assert image[V("a")] == pytest.approx(-1)

    def test_partial_overlap_rejected(self):
        with pytest.raises(DomainError, match="partially overlaps"):
            PBS(("a", "b"), ("a", "c")).act(ModeRegistry(["a", "b", "c"]))

    @pytest.mark.parametrize("element", [
        PBS(("a", "b"), ("c", "d")),
        BS(("1'_in", "d3"), ("1'", "1''")),
        HWP.degrees("7", 67.5),
        PhaseShift(V("1'"), math.pi),
    ])
    def test_params_round_trip(self, element):
        assert element_from_params(element.kind, element.params()) == element

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            element_from_params("mirror", {})


# ==================== Networks ====================

class TestNetworks:

    def test_registry_starts_with_ports(self):
        net = Network((PBS(("x", "d"), ("p", "q")), Checkpoint("mid"), HWP.degrees("p", 45)), ports=("y", "x"))
        assert net.registry.labels == ("y", "x", "d", "p", "q")
        assert net.checkpoints == ("mid",)
        assert len(net.elements) == 2

    @pytest.mark.parametrize("name", sorted(SCHEMES))
    def test_every_stage_compiles_to_a_unitary(self, name):
        for stage in SCHEMES[name]().stages:
            u = compile_network(stage.network)
            assert is_unitary(u, 1e-10)

    def test_pswap_checkpoints(self):
        net = scheme_pswap().network
        assert net.checkpoints == ("split", "mix", "out")
        state = inject(net.registry, [H("1_in"), H("2_in")])
        marks = dict(checkpoint_states(net, state))

        split = marks["split"]
        assert split.amplitude(V("1"), H("3")) == pytest.approx(S)
        assert split.amplitude(V("1"), V("3")) == pytest.approx(S)

        out = marks["out"]
        quarter = S / 2
        assert out.amplitude(H("12"), H("9")) == pytest.approx(quarter)
        assert out.amplitude(H("12"), H("10")) == pytest.approx(quarter)
        assert out.amplitude(H("12"), H("12")) == pytest.approx(quarter)
        assert out.amplitude(H("11"), H("11")) == pytest.approx(-quarter)
        assert len(out.terms()) == 8

    @pytest.mark.parametrize("name", ["split", "mix", "out"])
    def test_pswap_checkpoints_for_a_general_input(self, name):
        net = scheme_pswap().network
        state = JointPhotonState(net.registry, pswap_state(net.registry, PSWAP_INPUT))
        marks = dict(checkpoint_states(net, state))
        expected = pswap_state(net.registry, PSWAP_STAGES[name])
        np.testing.assert_allclose(marks[name].amps, expected, atol=1e-12)

    @pytest.mark.parametrize("i", ["9", "10"])
    def test_cnot_state_after_first_pswap(self, i):
        stage = scheme_cnot().stages[0]
        registry = stage.network.registry
        a = ALPHAS[:4] / np.linalg.norm(ALPHAS[:4])
        state = JointPhotonState(registry, two_photon(registry, [
            (a[0], {H("1"): 1}, {H("2"): 1}),
            (a[1], {H("1"): 1}, {V("2"): 1}),
            (a[2], {V("1"): 1}, {H("2"): 1}),
            (a[3], {V("1"): 1}, {V("2"): 1}),
        ]))
        results = post_select(evolve(state, compile_network(stage.network)), stage.post_selection)
        result = next(r for r in results if r.label == f"{i}-12")
        assert result.probability == pytest.approx(0.125)

        # the qubit rides rail i when the control was 0, the control sits on 1' otherwise
        expected = two_photon(registry, [
            (a[0], {H("a.12"): 1}, {H(f"a.{i}"): S, V(f"a.{i}"): S}),
            (a[1], {H("a.12"): 1}, {H(f"a.{i}"): S, V(f"a.{i}"): -S}),
            (a[2], {V("a.1'"): 1}, {H("a.12"): S, V("a.12"): S}),
            (a[3], {V("a.1'"): 1}, {H("a.12"): S, V("a.12"): -S}),
        ])
        np.testing.assert_allclose(result.state.amps, expected, atol=1e-12)

    def test_final_checkpoint_matches_compiled_network(self):
        net = scheme_pswap().network
        state = inject(net.registry, [V("1'_in"), V("2_in")])
        marks = dict(checkpoint_states(net, state))
        whole = evolve(state, compile_network(net))
        np.testing.assert_allclose(marks["out"].amps, whole.amps, atol=1e-12)

    def test_checkpoint_registry_must_match(self):
        with pytest.raises(DomainError):
            checkpoint_states(scheme_pswap().network, inject(ModeRegistry(["a"]), [H("a")]))

    def test_schema_round_trip(self):
        net = scheme_pswap().network
        schema = NetworkSchema.model_validate_json(NetworkSchema.from_network(net).model_dump_json())
        rebuilt = schema.to_network()
        assert rebuilt.checkpoints == net.checkpoints
        assert rebuilt.registry.labels == net.registry.labels
        np.testing.assert_allclose(compile_network(rebuilt), compile_network(net), atol=1e-12)

    def test_schema_modes_must_match(self):
        schema = NetworkSchema.from_network(scheme_pswap().network)
        schema.modes = list(reversed(schema.modes))
        with pytest.raises(DomainError):
            schema.to_network()


# ==================== Photon states ====================

class TestPhotonStates:

    def test_shape_checked(self):
        with pytest.raises(DomainError):
            JointPhotonState(ModeRegistry(["a"]), np.ones((2, 3)) / math.sqrt(6))

    def test_norm_checked(self):
        with pytest.raises(DomainError, match="normalized"):
            JointPhotonState(ModeRegistry(["a"]), np.ones((2, 2)))

    def test_terms_need_equal_photon_counts(self):
        with pytest.raises(DomainError):
            JointPhotonState.from_terms(ModeRegistry(["a"]), {(H("a"),): S, (H("a"), V("a")): S})

    def test_evolve_shape(self):
        state = inject(ModeRegistry(["a"]), [H("a")])
        with pytest.raises(DomainError):
            evolve(state, np.eye(4))

    def test_relabel_moves_amplitude(self):
        state = JointPhotonState.from_terms(ModeRegistry(["a", "b"]), {(H("a"), V("b")): 1})
        target = ModeRegistry(["x", "y"])
        moved = relabel(state, {H("a"): H("x"), V("b"): V("y")}, target)
        assert moved.amplitude(H("x"), V("y")) == pytest.approx(1)

    def test_relabel_rejects_merging(self):
        state = inject(ModeRegistry(["a", "b"]), [H("a")])
        with pytest.raises(DomainError):
            relabel(state, {H("a"): H("x"), H("b"): H("x")}, ModeRegistry(["x"]))

    def test_relabel_rejects_dropped_amplitude(self):
        state = JointPhotonState.from_terms(ModeRegistry(["a"]), {(H("a"),): S, (V("a"),): S})
        with pytest.raises(SchemeIntegrityError):
            relabel(state, {H("a"): H("x")}, ModeRegistry(["x"]))


# ==================== Post-selection ====================

class TestPostSelection:

    def test_overlapping_slots_rejected(self):
        with pytest.raises(DomainError):
            Branch("bad", (rail("a"), frozenset({H("a")})))

    def test_mask_needs_one_photon_per_slot(self):
        registry = ModeRegistry(["x", "y"])
        mask = Branch("x-y", (rail("x"), rail("y"))).accept_mask(registry, 2)
        hx, vx, hy = registry.index(H("x")), registry.index(V("x")), registry.index(H("y"))
        assert mask[hx, hy] and mask[hy, vx]
        assert not mask[hx, vx]
        assert not mask[hy, hy]

    def test_slot_count_must_match_photons(self):
        with pytest.raises(DomainError):
            Branch("x", (rail("x"),)).accept_mask(ModeRegistry(["x"]), 2)

    def test_shared_rail_counts_once_per_pattern(self):
        scheme = scheme_pswap()
        registry = scheme.network.registry
        rule = scheme.post_selection
        state = JointPhotonState.from_terms(registry, {(V("1'"), H("12")): 1})
        probabilities = {r.label: r.probability for r in post_select(state, rule)}
        assert probabilities == {"9-12": 1.0, "10-12": 1.0, "9-11": 0.0, "10-11": 0.0}
        assert accepted_probability(state, rule) == pytest.approx(1.0)
        assert not rule.is_exclusive(registry, 2)

    def test_disjoint_rails_are_exclusive(self):
        registry = ModeRegistry(["a", "b", "c", "d"])
        rule = PostSelection((Branch("a-b", (rail("a"), rail("b"))), Branch("c-d", (rail("c"), rail("d")))))
        assert rule.is_exclusive(registry, 2)
        state = JointPhotonState.from_terms(registry, {(H("a"), V("b")): S, (H("c"), H("d")): S})
        assert sum(r.probability for r in post_select(state, rule)) == pytest.approx(1.0)
        assert accepted_probability(state, rule) == pytest.approx(1.0)

    def test_projection_is_idempotent(self):
        scheme = scheme_pswap()
        registry = scheme.network.registry
        joint = scheme.encoding.to_photons(random_state(scheme.encoding.dims, 9), registry)
        out = evolve(joint, compile_network(scheme.network))
        for branch, result in zip(scheme.post_selection.branches, post_select(out, scheme.post_selection)):
            (again,) = post_select(result.state, PostSelection((branch,)))
            assert again.probability == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(again.state.amps, result.state.amps, atol=1e-12)

    def test_zero_probability_branch_has_no_state(self):
        state = inject(ModeRegistry(["a", "b", "c"]), [H("a"), H("b")])
        results = post_select(state, PostSelection((Branch("a-c", (rail("a"), rail("c"))),)))
        assert results[0].probability == 0.0 and results[0].state is None

    def test_recombine_runs_on_acceptance(self):
        registry = ModeRegistry(["i", "aux", "m", "x"])
        state = JointPhotonState.from_terms(registry, {(V("aux"),): 1})
        branch = Branch("i", (frozenset({H("i"), V("i"), V("aux")}),), (PBS(("i", "aux"), ("m", "x")),))
        (result,) = post_select(state, PostSelection((branch,)))
        assert result.probability == pytest.approx(1)
        assert result.state.amplitude(V("m")) == pytest.approx(1)
        assert branch.live == frozenset({"i", "aux", "m", "x"})

    def test_feed_forward_applies_per_branch(self):
        registry = ModeRegistry(["a"])
        state = inject(registry, [V("a")])
        result = ConditionalResult("a", 1.0, state, frozenset({"a"}))
        fixed = apply_feed_forward(result, FeedForwardRule({"a": (PhaseShift(V("a"), math.pi),)}))
        assert fixed.state.amplitude(V("a")) == pytest.approx(-1)
        untouched = apply_feed_forward(result, FeedForwardRule({"b": (PhaseShift(V("a"), math.pi),)}))
        assert untouched is result

    def test_feed_forward_on_dead_rail(self):
        state = inject(ModeRegistry(["a", "b"]), [V("a")])
        result = ConditionalResult("a", 1.0, state, frozenset({"a"}))
        with pytest.raises(DomainError, match="dead rails"):
            apply_feed_forward(result, FeedForwardRule({"a": (HWP.degrees("b", 0),)}))


# ==================== Properties ====================

@settings(max_examples=1000, deadline=None)
@given(theta=st.floats(min_value=-2 * math.pi, max_value=2 * math.pi, allow_nan=False))
def test_hwp_is_self_inverse(theta):
    m = hwp_matrix(theta)
    np.testing.assert_allclose(m @ m, np.eye(2), atol=1e-10)
    assert is_unitary(m)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_post_selection_never_exceeds_one(seed):
    rng = np.random.default_rng(seed)
    registry = ModeRegistry(["a", "b", "c"])
    amps = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    state = JointPhotonState(registry, amps / np.linalg.norm(amps))
    rule = PostSelection((
        Branch("a-b", (rail("a"), rail("b"))),
        Branch("a-c", (rail("a"), rail("c"))),
        Branch("b-c", (rail("b"), rail("c"))),
    ))
    results = post_select(state, rule)
    assert sum(r.probability for r in results) <= 1 + 1e-12
    assert all(r.probability >= 0 for r in results)


@settings(max_examples=1000, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_evolution_preserves_norm(seed):
    net = scheme_pswap().network
    rng = np.random.default_rng(seed)
    m = len(net.registry)
    amps = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    state = JointPhotonState(net.registry, amps / np.linalg.norm(amps))
    out = evolve(state, compile_network(net))
    assert abs(np.linalg.norm(out.amps) - 1) <= 1e-9


RAILS = ["a", "b", "c"]
rail_pairs = st.permutations(RAILS).map(lambda p: (p[0], p[1]))
elements = st.one_of(
    rail_pairs.map(lambda p: PBS(p, p)),
    rail_pairs.map(lambda p: PBS(p, p[::-1])),
    rail_pairs.map(lambda p: BS(p, p)),
    st.tuples(st.sampled_from(RAILS), st.floats(min_value=0, max_value=180, allow_nan=False)).map(
        lambda t: HWP.degrees(*t)
    ),
)


@settings(max_examples=300, deadline=None)
@given(steps=st.lists(elements, min_size=1, max_size=10))
def test_random_networks_compile_to_unitaries(steps):
    u = compile_network(Network(tuple(steps), ports=tuple(RAILS)))
    assert is_unitary(u, 1e-10)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_evolve_commutes_with_photon_permutation(seed):
    rng = np.random.default_rng(seed)
    registry = ModeRegistry(["a", "b"])
    m = len(registry)
    u, _ = np.linalg.qr(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))
    amps = rng.normal(size=(m, m, m)) + 1j * rng.normal(size=(m, m, m))
    state = JointPhotonState(registry, amps / np.linalg.norm(amps))
    swapped = JointPhotonState(registry, np.transpose(state.amps, (1, 0, 2)))
    np.testing.assert_allclose(
        evolve(swapped, u).amps, np.transpose(evolve(state, u).amps, (1, 0, 2)), atol=1e-12
    )

    symmetric = amps + np.transpose(amps, (1, 0, 2))
    state = JointPhotonState(registry, symmetric / np.linalg.norm(symmetric))
    out = evolve(state, u).amps
    np.testing.assert_allclose(out, np.transpose(out, (1, 0, 2)), atol=1e-12)


@pytest.mark.parametrize("name", sorted(SCHEMES))
def test_first_stage_branches_on_logical_inputs(name):
    # branches sharing the 1' rail stay within 1 on logically encoded photons
    scheme = SCHEMES[name]()
    stage = scheme.stages[0]
    registry = stage.network.registry
    unitary = compile_network(stage.network)
    rng = np.random.default_rng(256)
    for _ in range(100):
        joint = scheme.encoding.to_photons(random_state(scheme.encoding.dims, rng), registry)
        out = evolve(joint, unitary)
        per_pattern = sum(r.probability for r in post_select(out, stage.post_selection))
        accepted = accepted_probability(out, stage.post_selection)
        assert per_pattern <= 1 + 1e-9
        assert accepted <= per_pattern + 1e-12
