import numpy as np
import pytest
from hypothesis import given, strategies as st

from casgep.errors import EmptyPrefixError, MissingSlotError, UnknownIdError
from casgep.iscore import (
    Ensemble,
    GlobalState,
    Interaction,
    InteractionSpace,
    Population,
    ResourceSpace,
    StateLayout,
    goods_of,
    is_family_of,
    restrict,
)


def two_interaction_state(goods=((2.0, 3.0), (2.5, 3.5), (1.0, 4.0)), grid=(0.0, 1.0, 2.0)):
    # entity 0 propagates both goods; its column 0 is an activation level
    space = InteractionSpace.build(
        [0, 1, 2],
        [Interaction(10, {1}, 0, {2}), Interaction(11, {2}, 0, {1})],
    )
    layout = StateLayout(activation={"a": 0}, goods={10: 1, 11: 2})
    states = {0: [[0.5, g1, g2] for g1, g2 in goods]}
    return GlobalState(space, grid, states, {0: layout})


def test_family_membership():
    space = InteractionSpace.build([1, 2, 3], [Interaction(0, {1, 2}, 3)])
    assert is_family_of(Population({1}), [0], space)
    assert not is_family_of(Population({3}), [0], space)


def test_family_quantifier_needs_every_interaction():
    space = InteractionSpace.build([1, 2, 3], [Interaction(0, {1}, 3), Interaction(1, {2}, 3)])
    assert not is_family_of(Population({1}), [0, 1], space)


def test_family_unknown_ids():
    space = InteractionSpace.build([1, 2], [Interaction(0, {1}, 2)])
    with pytest.raises(UnknownIdError):
        is_family_of(Population({1}), [5], space)
    with pytest.raises(UnknownIdError):
        is_family_of(Population({9}), [0], space)


def test_interaction_needs_agents_and_known_entities():
    with pytest.raises(ValueError):
        Interaction(0, set(), 1)
    with pytest.raises(UnknownIdError):
        InteractionSpace.build([1], [Interaction(0, {1}, 2)])


def test_restrict_full_range_is_identity():
    gs = two_interaction_state()
    assert restrict(gs, 2.0) == gs


def test_restrict_prefix():
    gs = two_interaction_state()
    r = restrict(gs, 1.0)
    assert list(r.time_grid) == [0.0, 1.0]
    assert r.states[0].shape == (2, 3)
    np.testing.assert_array_equal(r.states[0], gs.states[0][:2])


def test_restrict_composition():
    gs = two_interaction_state()
    assert restrict(restrict(gs, 2.0), 1.0) == restrict(gs, 1.0)


def test_restrict_before_grid():
    with pytest.raises(EmptyPrefixError):
        restrict(two_interaction_state(), -0.5)


def test_goods_single_read():
    space = InteractionSpace.build([0, 1], [Interaction(0, {1}, 0)])
    gs = GlobalState(space, [0.0], {0: [[0.5]]}, {0: StateLayout(goods={0: 0})})
    np.testing.assert_array_equal(goods_of(gs, [0], 0.0), [0.5])


def test_goods_follow_requested_order():
    gs = two_interaction_state()
    np.testing.assert_array_equal(goods_of(gs, [11, 10], 0.0), [3.0, 2.0])


def test_goods_between_grid_points_use_left_value():
    gs = two_interaction_state()
    np.testing.assert_array_equal(goods_of(gs, [10, 11], 1.5), [2.5, 3.5])


def test_goods_missing_slot():
    space = InteractionSpace.build([0, 1], [Interaction(0, {1}, 0)])
    gs = GlobalState(space, [0.0], {0: [[0.5]]}, {0: StateLayout(proper={"x": 0})})
    with pytest.raises(MissingSlotError):
        goods_of(gs, [0], 0.0)


def test_activation_outside_unit_interval_rejected():
    with pytest.raises(ValueError):
        two_interaction_state().__class__(
            two_interaction_state().space, [0.0], {0: [[1.5, 0.0, 0.0]]},
            {0: StateLayout(activation={"a": 0}, goods={10: 1, 11: 2})},
        )


def test_good_outside_resource_space_rejected():
    space = InteractionSpace.build([0, 1], [Interaction(0, {1}, 0, resource_space=ResourceSpace.interval(0, 1))])
    with pytest.raises(ValueError):
        GlobalState(space, [0.0], {0: [[2.0]]}, {0: StateLayout(goods={0: 0})})


def test_occurrence_times_inside_horizon():
    space = InteractionSpace.build([0, 1], [Interaction(0, {1}, 0)])
    with pytest.raises(ValueError):
        GlobalState(space, [0.0, 1.0], {}, {}, occurrence_times={0: [[0, 0, 0], [0, 0, 3.0]]})


def test_grid_strictly_increasing():
    space = InteractionSpace.build([0, 1], [Interaction(0, {1}, 0)])
    with pytest.raises(ValueError):
        GlobalState(space, [0.0, 0.0], {}, {})


def test_state_is_read_only():
    gs = two_interaction_state()
    with pytest.raises(ValueError):
        gs.states[0][0, 0] = 0.1


def test_ensemble_weights():
    gs = two_interaction_state()
    ens = Ensemble.uniform([gs, gs])
    assert len(ens) == 2
    assert sum(w for _, w in ens) == pytest.approx(1.0)
    with pytest.raises(Exception):
        Ensemble([gs], [0.4])


grids = st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=8, unique=True).map(sorted)


@st.composite
def random_state(draw):
    grid = draw(grids)
    n = len(grid)
    act = draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
    g1 = draw(st.lists(st.floats(-10, 10), min_size=n, max_size=n))
    g2 = draw(st.lists(st.floats(-10, 10), min_size=n, max_size=n))
    space = InteractionSpace.build([0, 1, 2], [Interaction(10, {1}, 0), Interaction(11, {2}, 0)])
    layout = StateLayout(activation={"a": 0}, goods={10: 1, 11: 2})
    states = {0: np.column_stack([act, g1, g2])}
    return GlobalState(space, grid, states, {0: layout})


@given(random_state(), st.floats(0, 100), st.floats(0, 100))
def test_restrict_monotone(gs, s, t):
    s, t = sorted((s, t))
    if s < gs.time_grid[0]:
        return
    assert restrict(gs, s) == restrict(restrict(gs, t), s)


@given(random_state(), st.floats(0, 100))
def test_activation_stays_in_unit_interval(gs, t):
    if t < gs.time_grid[0]:
        return
    col = restrict(gs, t).states[0][:, 0]
    assert np.all((col >= 0) & (col <= 1))


@given(random_state(), st.floats(0, 100))
def test_goods_prefix_consistency(gs, t):
    if t < gs.time_grid[0]:
        return
    np.testing.assert_array_equal(goods_of(restrict(gs, t), [10, 11], t), goods_of(gs, [10, 11], t))
