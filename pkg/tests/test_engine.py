import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chipfire import closedform as cf
from chipfire import engine
from chipfire.engine import (Chip, IllegalMoveError, LabeledConfiguration,
                             LeftmostStrategy, RandomStrategy, ScriptedValuesStrategy,
                             run_to_completion, standard_initial)
from chipfire.variants import base, exponential, loops_everywhere, multi_edge, origin_loops


def test_enabled_sites():
    v = base()
    config = LabeledConfiguration.from_values({0: [1, 2, 3, 4]})
    assert config.enabled_sites(v) == [0]
    assert LabeledConfiguration.from_values({}).enabled_sites(v) == []
    config = LabeledConfiguration.from_values({-1: [3], 0: [1, 2], 1: [4]})
    assert config.enabled_sites(v) == [0]


def test_apply_move_split_rule():
    v = base()
    config = LabeledConfiguration.from_values({0: [1, 2, 3, 4]})  # ids 0..3
    after = config.apply(v, 0, (2, 3))  # chips valued 3 and 4
    assert after.values_by_site() == {-1: (3,), 0: (1, 2), 1: (4,)}

    loops = loops_everywhere()
    config = LabeledConfiguration.from_values({2: [5, 7, 9]})
    after = config.apply(loops, 2, tuple(c.id for c in config.chips_at(2)))
    assert after.values_by_site() == {1: (5,), 2: (7,), 3: (9,)}


def test_apply_move_errors():
    v = base()
    config = LabeledConfiguration.from_values({0: [1], 1: [2, 3]})
    with pytest.raises(IllegalMoveError):
        config.apply(v, 0, (0,))  # not enabled
    with pytest.raises(IllegalMoveError):
        config.apply(v, 1, (1,))  # wrong cardinality
    with pytest.raises(IllegalMoveError):
        config.apply(v, 1, (0, 1))  # chip 0 absent from site 1


def test_full_run_walkthrough_n4():
    # the complete labeled firing sequence with chips 1..4 at the origin
    v = base()
    config = LabeledConfiguration.from_values({0: [1, 2, 3, 4]})
    script = ScriptedValuesStrategy([(0, (3, 4)), (0, (1, 2)), (1, (2, 4)),
                                     (-1, (1, 3)), (0, (2, 3))])
    trace = run_to_completion(config, v, script)
    states = [after.values_by_site() for _, _, after in trace.replay()]
    assert states[0] == {-1: (3,), 0: (1, 2), 1: (4,)}
    assert states[1] == {-1: (1, 3), 1: (2, 4)}
    assert states[2] == {-1: (1, 3), 0: (2,), 2: (4,)}
    assert states[3] == {-2: (1,), 0: (2, 3), 2: (4,)}
    assert states[4] == {-2: (1,), -1: (2,), 1: (3,), 2: (4,)}


def test_standard_initial_presets():
    assert standard_initial(base(), 4).values_by_site() == {0: (-2, -1, 1, 2)}
    assert standard_initial(loops_everywhere(), 7).values_by_site() == {
        0: (-2, -1, -1, 0, 1, 1, 2)}
    stair = standard_initial(base(), 3, preset="staircase")
    assert stair.values_by_site() == {-1: (-3, -2, -1), 0: (1, 2, 3, 4)}
    with pytest.raises(cf.UnsupportedVariantError):
        standard_initial(multi_edge(2), 4, preset="staircase")
    with pytest.raises(cf.UnsupportedVariantError):
        standard_initial(base(), 4, preset="bogus")


def test_run_terminates_sorted_base():
    v = base()
    for n in (2, 4, 10):
        for strategy in (LeftmostStrategy(), RandomStrategy()):
            trace = run_to_completion(standard_initial(v, n), v, strategy, seed=7)
            assert trace.final_config().values_by_site() == cf.expected_sorted_terminal(v, n)
            assert trace.fire_counts() == cf.fire_count_table(v, n)


def test_run_n2_single_move():
    v = base()
    trace = run_to_completion(standard_initial(v, 2), v, LeftmostStrategy())
    assert len(trace) == 1
    assert trace.final_config().values_by_site() == {-1: (-1,), 1: (1,)}


def test_leftmost_vs_random_confluence():
    v = base()
    a = run_to_completion(standard_initial(v, 10), v, LeftmostStrategy())
    b = run_to_completion(standard_initial(v, 10), v, RandomStrategy(), seed=7)
    assert a.final_config() == b.final_config()


def test_seeded_runs_reproducible():
    v = loops_everywhere()
    a = run_to_completion(standard_initial(v, 11), v, RandomStrategy(), seed=42)
    b = run_to_completion(standard_initial(v, 11), v, RandomStrategy(), seed=42)
    assert a.records == b.records


def test_staircase_run_sorts():
    v = base()
    for q in (1, 2, 3):
        trace = run_to_completion(standard_initial(v, q, preset="staircase"), v,
                                  RandomStrategy(), seed=1)
        assert trace.final_config().values_by_site() == \
            cf.expected_sorted_terminal(v, q, preset="staircase")


def test_origin_loops_run():
    v = origin_loops(2)
    trace = run_to_completion(standard_initial(v, 8), v, RandomStrategy(), seed=5)
    assert trace.final_config().values_by_site() == cf.expected_sorted_terminal(v, 8)


def test_replay_verifies_metadata():
    v = base()
    trace = run_to_completion(standard_initial(v, 8), v, RandomStrategy(), seed=3)
    list(trace.replay(verify=True))  # must not raise
    # corrupt one record and watch the replay catch it
    rec = trace.records[2]
    trace.records[2] = engine.MoveRecord(rec.step, rec.site, rec.chosen_ids,
                                         rec.chosen_values, rec.present_before + 1,
                                         rec.present_ids, rec.fire_index_at_site)
    with pytest.raises(engine.ChipFiringError):
        list(trace.replay(verify=True))


def test_trace_jsonl_round_trip():
    v = exponential(1)
    trace = run_to_completion(standard_initial(v, 8), v, RandomStrategy(), seed=9,
                              n=8, preset="origin")
    buf = io.StringIO()
    trace.write_jsonl(buf)
    buf.seek(0)
    back = engine.Trace.read_jsonl(buf)
    assert back.variant == v
    assert back.initial == trace.initial
    assert len(back) == len(trace)
    assert [r.site for r in back.records] == [r.site for r in trace.records]
    assert [r.chosen_values for r in back.records] == [r.chosen_values for r in trace.records]
    assert back.final_config().values_by_site() == trace.final_config().values_by_site()
    header = trace.header_json()
    assert header["n"] == 8 and header["seed"] == 9 and header["strategy"] == "random"


def test_observers_see_every_move():
    v = base()
    seen = []
    run_to_completion(standard_initial(v, 6), v, LeftmostStrategy(),
                      observers=[lambda state, rec, meta: seen.append(rec.step)])
    assert seen == list(range(sum(cf.fire_count_table(v, 6).values())))


def test_move_cap():
    v = base()
    with pytest.raises(engine.NonTerminationError):
        run_to_completion(standard_initial(v, 10), v, LeftmostStrategy(), move_cap=3)


def test_site_sequence_legal_for_any_chip_choice():
    """Move legality depends only on counts: a site sequence legal for one
    chip-selection policy is legal for any other and fires the same sites."""
    v = loops_everywhere()
    trace = run_to_completion(standard_initial(v, 11), v, RandomStrategy(), seed=3)
    config = standard_initial(v, 11)
    for rec in trace.records:
        chips = sorted(config.chips_at(rec.site), key=lambda c: (-c.value, -c.id))
        config = config.apply(v, rec.site, tuple(c.id for c in chips[:v.threshold(rec.site)]))
    assert not config.enabled_sites(v)
    counts = {s: len(vals) for s, vals in config.values_by_site().items()}
    final = trace.final_config()
    assert counts == {s: len(vals) for s, vals in final.values_by_site().items()}


def test_chip_count_and_positions_stay_bounded():
    v = base()
    n = 8
    trace = run_to_completion(standard_initial(v, n), v, RandomStrategy(), seed=11)
    for _, _, after in trace.replay(verify=False):
        assert after.total_chips() == n
        assert all(-n <= site <= n for site, _ in after.chips())


@st.composite
def config_and_move(draw):
    v = base()
    sites = draw(st.lists(st.integers(-3, 3), min_size=2, max_size=6))
    values = draw(st.lists(st.integers(-3, 3), min_size=len(sites), max_size=len(sites)))
    occ = {}
    for s, val in zip(sites, values):
        occ.setdefault(s, []).append(val)
    config = LabeledConfiguration.from_values(occ)
    enabled = config.enabled_sites(v)
    if not enabled:
        return None
    site = enabled[draw(st.integers(0, len(enabled) - 1))]
    chips = sorted(config.chips_at(site), key=lambda c: (c.value, c.id))
    return config, site, tuple(c.id for c in chips[:2])


@given(config_and_move())
@settings(max_examples=200, deadline=None)
def test_permutation_equivariance(data):
    """Relabeling ids while keeping values leaves the value-level outcome fixed."""
    if data is None:
        return
    config, site, chosen = data
    v = base()
    after = config.apply(v, site, chosen)
    # rebuild with reversed id assignment, fire the same value multiset
    chosen_values = sorted(config.chips_at(site)[i].value
                           for i, c in enumerate(config.chips_at(site)) if c.id in chosen)
    perm = {}
    chips = [(s, c) for s, c in config.chips()]
    new_ids = sorted((c.id for _, c in chips), reverse=True)
    for (s, c), nid in zip(chips, new_ids):
        perm[c.id] = nid
    relabeled = LabeledConfiguration(
        {s: [Chip(perm[c.id], c.value) for c in cs] for s, cs in config.occupancy.items()})
    ids2 = engine._ids_for_values(relabeled, site, chosen_values)
    after2 = relabeled.apply(v, site, ids2)
    assert after.values_by_site() == after2.values_by_site()
