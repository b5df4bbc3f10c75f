from itertools import combinations

import pytest

from chipfire import analysis, closedform, explorer
from chipfire.engine import (CapExceededError, LabeledConfiguration, RandomStrategy,
                             run_to_completion, standard_initial)
from chipfire.explorer import (adversarial_1mod4, canonicalize, explore,
                               find_unsorted_terminal, successor_outcomes,
                               to_site_dict)
from chipfire.variants import base, loops_everywhere, multi_edge


def test_successor_outcomes_three_chips():
    state = canonicalize(LabeledConfiguration.from_values({0: [1, 2, 3]}))
    got = successor_outcomes(state, base())
    want = {
        ((-1, (1,)), (0, (3,)), (1, (2,))),
        ((-1, (1,)), (0, (2,)), (1, (3,))),
        ((-1, (2,)), (0, (1,)), (1, (3,))),
    }
    assert got == want


def test_successor_outcomes_equal_values_merge():
    state = canonicalize(LabeledConfiguration.from_values({0: [5, 5]}))
    assert len(successor_outcomes(state, base())) == 1
    state = canonicalize(LabeledConfiguration.from_values({0: [1, 2]}))
    assert successor_outcomes(state, base()) == {((-1, (1,)), (1, (2,)))}


def test_explore_base_even_confluent():
    for n in (2, 4, 6):
        rep = explore(standard_initial(base(), n), base())
        assert rep.confluent
        assert to_site_dict(rep.terminals[0]) == closedform.expected_sorted_terminal(base(), n)
        assert rep.sorted_terminal_count == 1


def test_explore_base_n3():
    rep = explore(standard_initial(base(), 3), base())
    assert rep.terminal_count == 3
    assert rep.sorted_terminal_count == 1


def test_explore_base_n5_nonconfluent():
    rep = explore(standard_initial(base(), 5), base())
    assert rep.terminal_count >= 2
    assert rep.sorted_terminal_count >= 1
    assert len(rep.unsorted_terminals()) >= 1
    # every terminal projects to the unique unlabeled terminal
    unlabeled = closedform.terminal_unlabeled(base(), 5)
    for t in rep.terminals:
        assert {s: len(v) for s, v in t} == unlabeled


def test_explore_loops_n7_all_sorted():
    rep = explore(standard_initial(loops_everywhere(), 7), loops_everywhere())
    assert rep.terminal_count == rep.sorted_terminal_count


def test_explore_cap():
    with pytest.raises(CapExceededError) as err:
        explore(standard_initial(base(), 6), base(), state_cap=5)
    assert err.value.states_visited > 5


def test_find_unsorted_terminal_witness_replays():
    trace = find_unsorted_terminal(standard_initial(base(), 3), base())
    assert trace is not None and len(trace) == 1
    assert not analysis.is_weakly_sorted(trace.final_config())
    list(trace.replay(verify=True))

    trace = find_unsorted_terminal(standard_initial(loops_everywhere(), 5),
                                   loops_everywhere())
    assert trace is not None
    assert not analysis.is_weakly_sorted(trace.final_config())


def test_find_unsorted_terminal_none_for_even():
    assert find_unsorted_terminal(standard_initial(base(), 4), base()) is None


def _id_level_terminals(initial, variant):
    """Reference exploration keeping chip ids, then erasing them at the end."""
    seen = set()
    terminals = set()
    stack = [initial]
    while stack:
        config = stack.pop()
        key = tuple(sorted((s, c) for s, c in config.chips()))
        if key in seen:
            continue
        seen.add(key)
        enabled = config.enabled_sites(variant)
        if not enabled:
            terminals.add(canonicalize(config))
            continue
        for site in enabled:
            ids = sorted(c.id for c in config.chips_at(site))
            for chosen in combinations(ids, variant.threshold(site)):
                stack.append(config.apply(variant, site, chosen))
    return terminals


@pytest.mark.parametrize("n", [2, 3, 4])
def test_canonicalization_soundness_vs_id_level(n):
    initial = standard_initial(base(), n)
    rep = explore(initial, base())
    assert set(rep.terminals) == _id_level_terminals(initial, base())


def test_explorer_agrees_with_engine_choices():
    """successor_outcomes equals applying every legal id-subset and erasing ids."""
    variant = loops_everywhere()
    config = standard_initial(variant, 7)
    rng_trace = run_to_completion(config, variant, RandomStrategy(), seed=2)
    states = [config] + [after for _, _, after in rng_trace.replay(verify=False)]
    for state in states[:6]:
        want = set()
        for site in state.enabled_sites(variant):
            ids = sorted(c.id for c in state.chips_at(site))
            for chosen in combinations(ids, variant.threshold(site)):
                want.add(canonicalize(state.apply(variant, site, chosen)))
        assert successor_outcomes(canonicalize(state), variant) == want


def test_adversarial_1mod4():
    trace = adversarial_1mod4(1)
    assert not analysis.is_weakly_sorted(trace.final_config())
    # cross-check against the exhaustive search at n=5
    rep = explore(standard_initial(loops_everywhere(), 5), loops_everywhere())
    assert canonicalize(trace.final_config()) in rep.unsorted_terminals()

    trace = adversarial_1mod4(2)
    oracle = closedform.fire_count_table(loops_everywhere(), 9)
    assert trace.fire_counts() == oracle
    assert not analysis.is_weakly_sorted(trace.final_config())


def test_hold_empty_control_matches_unlabeled_terminal():
    variant = loops_everywhere()
    initial = standard_initial(variant, 5)
    from chipfire.engine import HoldStrategy
    trace = run_to_completion(initial, variant, HoldStrategy(()))
    unlabeled = {s: len(v) for s, v in trace.final_config().values_by_site().items()}
    assert unlabeled == closedform.terminal_unlabeled(variant, 5)


def test_report_json_shape():
    rep = explore(standard_initial(base(), 3), base(), witness_unsorted=True)
    data = rep.to_json()
    assert data["terminal_count"] == 3
    assert data["confluent"] is False
    assert data["sorted_terminal_count"] == 1
    assert isinstance(data["terminals"], list) and len(data["terminals"]) == 3
    assert data["witness"] is not None


def test_multi_edge_exploration():
    rep = explore(standard_initial(multi_edge(2), 8), multi_edge(2))
    assert rep.confluent
    assert to_site_dict(rep.terminals[0]) == closedform.expected_sorted_terminal(multi_edge(2), 8)
