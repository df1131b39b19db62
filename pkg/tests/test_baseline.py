import math

import pytest
from hypothesis import given, settings, strategies as st

from zonemem.baseline import BaselineParams, BaselineState, initial_localization, neighborhood, step
from zonemem.memory import EventLedger, WorkingMemory
from zonemem.model import Pose, Signature, WorldMap, Zone

from conftest import line_world


def setup(world, store, params, batch=True):
    state = BaselineState(params=params)
    wm, ledger = WorkingMemory(params.memory_thr), EventLedger()
    if batch:
        initial_localization(state, world, store, wm, ledger)
    return state, wm, ledger


def test_initial_localization_loads_everything(store_for):
    world = line_world(120)
    state, wm, ledger = setup(world, store_for(world), BaselineParams())
    assert len(wm) == 120
    assert ledger.cumulative_loads == 120


def test_initial_localization_empty_world(store_for):
    world = WorldMap({}, {}, {})
    _, wm, _ = setup(world, store_for(world), BaselineParams())
    assert len(wm) == 0


def test_initial_localization_deterministic(store_for):
    world = line_world(30, [10, 20])
    a = setup(world, store_for(world), BaselineParams())[2]
    b = setup(world, store_for(world), BaselineParams())[2]
    assert a.events == b.events


def test_neighborhood_order():
    world = line_world(20)
    assert neighborhood(world, 5, 3) == [5, 4, 6, 3, 7, 2, 8]
    assert neighborhood(world, 1, 0) == [1]


def test_fully_loaded_neighborhood_is_quiet(store_for):
    world = line_world(40)
    state, wm, ledger = setup(world, store_for(world), BaselineParams(memory_thr=100))
    r = step(state, world, store_for(world), wm, ledger, Pose(10.0, 0.0), 1)
    assert (r.loads, r.unloads) == (0, 0)


def test_forget_110_down_to_100(store_for):
    world = line_world(110)
    store = store_for(world)
    state, wm, ledger = setup(world, store, BaselineParams(memory_thr=100))
    r = step(state, world, store, wm, ledger, Pose(0.0, 0.0), 1)
    # oracle: ceil(0.25 * 110) immune, 110 - 100 forgotten
    assert r.immune == math.ceil(0.25 * 110) == 28
    assert r.unloads == 10
    assert r.wm_size_end == 100
    # immune are ids 1..28 (nearest to x=0); the forget pool is ordered by
    # (weight, last_used, id) and all remaining keys tie except the id
    removed = [e.sig for e in ledger.events if e.kind.value == "Unload"]
    assert removed == list(range(29, 39))


def test_max_retrieved_lag(store_for):
    world = line_world(20)
    store = store_for(world)
    params = BaselineParams(memory_thr=100, max_retrieved=2, neighborhood_depth=4)
    state, wm, ledger = setup(world, store, params, batch=False)
    r = step(state, world, store, wm, ledger, Pose(4.0, 0.0), 1)
    # node 5 at x=4; within 4 hops: 1..9, ordered by (hop, id)
    assert r.candidates_added == 9
    assert r.loads == 2
    assert r.backlog == 7
    assert sorted(wm.loaded) == [4, 5]
    assert list(state.retrieval_backlog) == [6, 3, 7, 2, 8, 1, 9]


def test_localization_increments_weight(store_for):
    world = line_world(5)
    store = store_for(world)
    state, wm, ledger = setup(world, store, BaselineParams())
    step(state, world, store, wm, ledger, Pose(2.1, 0.0), 1)
    step(state, world, store, wm, ledger, Pose(1.9, 0.0), 2)
    assert state.weights == {3: 2}
    assert state.localized_node == 3


def test_localization_tie_lowest_id(store_for):
    world = line_world(4)
    store = store_for(world)
    state, wm, ledger = setup(world, store, BaselineParams())
    step(state, world, store, wm, ledger, Pose(0.5, 0.0), 1)
    assert state.localized_node == 1


def test_overshoot_when_immune_exceeds_threshold(store_for):
    world = line_world(150)
    store = store_for(world)
    state, wm, ledger = setup(world, store, BaselineParams(memory_thr=100, local_immunization_ratio=0.7))
    r = step(state, world, store, wm, ledger, Pose(0.0, 0.0), 1)
    assert r.immune == 105 >= r.wm_size_peak - 100
    assert r.wm_size_end == 105 > 100


def test_no_overshoot_when_pool_suffices(store_for):
    world = line_world(150)
    store = store_for(world)
    state, wm, ledger = setup(world, store, BaselineParams(memory_thr=100, local_immunization_ratio=0.5))
    r = step(state, world, store, wm, ledger, Pose(0.0, 0.0), 1)
    assert r.immune == 75
    assert r.wm_size_end == 100


def test_params_validation():
    with pytest.raises(ValueError):
        BaselineParams(memory_thr=0)
    with pytest.raises(ValueError):
        BaselineParams(local_immunization_ratio=1.5)
    with pytest.raises(ValueError):
        BaselineParams(max_retrieved=0)


def branching_world(n: int, seed: int) -> WorldMap:
    """Random tree on a line of poses: node i links to some earlier node."""
    import random

    rng = random.Random(seed)
    links = {i: set() for i in range(1, n + 1)}
    for i in range(2, n + 1):
        j = rng.randint(max(1, i - 4), i - 1)
        links[i].add(j)
        links[j].add(i)
    sigs = {
        i: Signature(i, "Z", Pose(float(i), float(rng.randint(0, 3))), 0, 0, "skeleton", frozenset(links[i]))
        for i in links
    }
    return WorldMap({"Z": Zone("Z", "Z", "corridor", tuple(sigs))}, sigs, {"seed": seed})


walk = st.lists(st.floats(0.0, 40.0, allow_nan=False), min_size=1, max_size=25)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 1000),
    thr=st.integers(1, 30),
    mr=st.one_of(st.none(), st.integers(1, 6)),
    ratio=st.sampled_from([0.0, 0.1, 0.25, 0.5, 1.0]),
    depth=st.integers(0, 4),
    xs=walk,
    batch=st.booleans(),
)
def test_frame_properties(tmp_path_factory, seed, thr, mr, ratio, depth, xs, batch):
    from zonemem.ltm import LtmStore

    world = branching_world(40, seed)
    params = BaselineParams(memory_thr=thr, max_retrieved=mr, local_immunization_ratio=ratio, neighborhood_depth=depth)
    with LtmStore.build(world, tmp_path_factory.mktemp("b") / "s.zmlt") as store:
        state, wm, ledger = setup(world, store, params, batch=batch)
        prev = None
        for frame, x in enumerate(xs, start=1):
            r = step(state, world, store, wm, ledger, Pose(x, 1.0), frame)
            assert r.wm_size_peak >= r.wm_size_end
            assert not set(state.retrieval_backlog) & set(wm.loaded)
            non_immune_at_peak = r.wm_size_peak - r.immune
            if non_immune_at_peak >= r.wm_size_peak - thr:
                assert r.wm_size_end <= thr
            else:
                assert r.wm_size_end == r.immune > thr
            if ratio == 0.0 and mr is None:
                assert r.wm_size_end <= thr
            if mr is not None and prev is not None and r.candidates_added > mr:
                assert r.backlog >= prev.backlog
            prev = r
        assert ledger.replay() == set(wm.loaded)
