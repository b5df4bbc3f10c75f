"""Exhaustive search over labeled configurations.

States are canonicalized by erasing chip ids: two configurations equal up
to id permutation among equal values have identical futures, because the
firing rule depends only on values.  The reachable canonical-state graph
is expanded breadth first; since every move raises the total fire count by
one, levels are graded and deduplication stays within a level.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._kernels import PAD, labeled_count, labeled_fill
from .engine import (CapExceededError, LabeledConfiguration, ScriptedValuesStrategy,
                     HoldStrategy, Trace, run_to_completion, standard_initial)
from .variants import Variant

DEFAULT_STATE_CAP = 5_000_000

# canonical state: ((site, (values...)), ...) sorted by site
CanonicalState = tuple[tuple[int, tuple[int, ...]], ...]


def canonicalize(config: LabeledConfiguration) -> CanonicalState:
    return tuple((site, config.values_at(site)) for site in sorted(config.occupancy))


def to_site_dict(state: CanonicalState) -> dict[int, tuple[int, ...]]:
    return dict(state)


def is_weakly_sorted_state(state: CanonicalState) -> bool:
    flat = [v for _, values in state for v in values]
    return all(a <= b for a, b in zip(flat, flat[1:]))


def successor_outcomes(state: CanonicalState, variant: Variant) -> set[CanonicalState]:
    """All one-move successors over every enabled site and distinct value choice.

    Distinct choices that split identically merge into one outcome.
    """
    occ = {site: list(values) for site, values in state}
    out: set[CanonicalState] = set()
    for site, values in state:
        th = variant.threshold(site)
        if len(values) < th:
            continue
        left, loop, right = variant.split(site)
        for chosen in {c for c in combinations(values, th)}:
            nxt = {s: list(v) for s, v in occ.items()}
            pool = nxt[site]
            for v in chosen:
                pool.remove(v)
            pool.extend(chosen[left:left + loop])
            nxt.setdefault(site - 1, []).extend(chosen[:left])
            nxt.setdefault(site + 1, []).extend(chosen[left + loop:])
            out.add(tuple((s, tuple(sorted(v))) for s, v in sorted(nxt.items()) if v))
    return out


@dataclass
class ExplorationReport:
    """Outcome of an exhaustive exploration."""

    states_visited: int
    terminals: tuple[CanonicalState, ...]
    confluent: bool
    sorted_terminal_count: int
    witness: list[tuple[int, tuple[int, ...]]] | None = None

    @property
    def terminal_count(self) -> int:
        return len(self.terminals)

    def unsorted_terminals(self) -> tuple[CanonicalState, ...]:
        return tuple(t for t in self.terminals if not is_weakly_sorted_state(t))

    def to_json(self) -> dict:
        return {
            "states_visited": self.states_visited,
            "terminal_count": self.terminal_count,
            "confluent": self.confluent,
            "sorted_terminal_count": self.sorted_terminal_count,
            "terminals": [{str(s): list(v) for s, v in t} for t in self.terminals],
            "witness": ([{"site": s, "chosen_values": list(v)} for s, v in self.witness]
                        if self.witness is not None else None),
        }


def _encode(state: CanonicalState, nchips: int) -> np.ndarray:
    row = np.empty(2 * nchips, np.int8)
    i = 0
    for site, values in state:
        for v in values:
            row[2 * i] = site
            row[2 * i + 1] = v
            i += 1
    assert i == nchips
    return row


def _decode(row: np.ndarray) -> CanonicalState:
    occ: dict[int, list[int]] = {}
    for i in range(row.shape[0] // 2):
        occ.setdefault(int(row[2 * i]), []).append(int(row[2 * i + 1]))
    return tuple((s, tuple(v)) for s, v in sorted(occ.items()))


def _site_tables(variant: Variant, radius: int):
    size = 2 * radius + 1
    left = np.empty(size, np.int64)
    right = np.empty(size, np.int64)
    thresh = np.empty(size, np.int64)
    for site in range(-radius, radius + 1):
        left[site + radius] = variant.left_mult(site)
        right[site + radius] = variant.right_mult(site)
        thresh[site + radius] = variant.threshold(site)
    return left, right, thresh


@dataclass
class _Level:
    states: np.ndarray
    parents: np.ndarray | None = None
    move_site: np.ndarray | None = None
    move_vals: np.ndarray | None = None


def _explore_levels(initial: LabeledConfiguration, variant: Variant,
                    state_cap: int, record_parents: bool):
    start = canonicalize(initial)
    nchips = initial.total_chips()
    if nchips == 0:
        level = _Level(np.zeros((1, 0), np.int8))
        return [level], [(0, 0, ())], 1
    span = max(abs(site) for site, _ in start)
    radius = span + nchips + 2
    maxval = max(max(abs(v) for v in vals) for _, vals in start)
    if radius > 120 or maxval > 120:
        raise ValueError("state encoding supports |site|, |value| <= 120")
    left, right, thresh = _site_tables(variant, radius)
    max_th = int(thresh.max())

    levels = [_Level(_encode(start, nchips).reshape(1, -1))]
    terminals: list[tuple[int, int, CanonicalState]] = []  # (level, row, state)
    visited = 1
    dummy_s = np.empty((1, 2 * nchips), np.int8)
    dummy_v = np.empty((1, max_th), np.int8)
    while True:
        frontier = levels[-1].states
        counts = labeled_count(frontier, thresh, radius, dummy_s, dummy_v)
        for r in np.flatnonzero(counts == 0):
            terminals.append((len(levels) - 1, int(r), _decode(frontier[r])))
        total = int(counts.sum())
        if total == 0:
            break
        offsets = np.zeros(frontier.shape[0], np.int64)
        np.cumsum(counts[:-1], out=offsets[1:])
        out_states = np.empty((total, 2 * nchips), np.int8)
        out_parent = np.empty(total, np.int64)
        out_site = np.empty(total, np.int8)
        out_vals = np.full((total, max_th), PAD, np.int8)
        labeled_fill(frontier, left, right, thresh, radius, offsets,
                     out_states, out_parent, out_site, out_vals)
        uniq, first = np.unique(out_states, axis=0, return_index=True)
        visited += uniq.shape[0]
        if visited > state_cap:
            raise CapExceededError(
                f"labeled exploration exceeded {state_cap} states",
                states_visited=visited)
        level = _Level(uniq)
        if record_parents:
            level.parents = out_parent[first]
            level.move_site = out_site[first]
            level.move_vals = out_vals[first]
        levels.append(level)
        if not record_parents:
            levels[-2] = _Level(np.zeros((0, 0), np.int8))  # drop old frontier
    return levels, terminals, visited


def _witness_moves(levels: list[_Level], level_idx: int, row_idx: int):
    moves = []
    li, ri = level_idx, row_idx
    while li > 0:
        level = levels[li]
        site = int(level.move_site[ri])
        vals = tuple(int(v) for v in level.move_vals[ri] if v != PAD)
        moves.append((site, vals))
        ri = int(level.parents[ri])
        li -= 1
    moves.reverse()
    return moves


def explore(initial: LabeledConfiguration, variant: Variant,
            state_cap: int = DEFAULT_STATE_CAP,
            witness_unsorted: bool = False) -> ExplorationReport:
    """Visit the full reachable canonical-state graph and collect terminals.

    Raises CapExceededError (carrying states_visited) when the cap is hit.
    With ``witness_unsorted`` the report includes a move sequence to some
    non-weakly-sorted terminal when one exists (at the cost of keeping the
    whole level history in memory).
    """
    levels, term_locs, visited = _explore_levels(initial, variant, state_cap,
                                                 record_parents=witness_unsorted)
    terminals = []
    witness = None
    for li, ri, state in term_locs:
        terminals.append(state)
        if (witness_unsorted and witness is None
                and not is_weakly_sorted_state(state)):
            witness = _witness_moves(levels, li, ri)
    terminals = tuple(sorted(set(terminals)))
    sorted_count = sum(is_weakly_sorted_state(t) for t in terminals)
    return ExplorationReport(
        states_visited=visited,
        terminals=terminals,
        confluent=len(terminals) == 1,
        sorted_terminal_count=sorted_count,
        witness=witness,
    )


def find_unsorted_terminal(initial: LabeledConfiguration, variant: Variant,
                           state_cap: int = DEFAULT_STATE_CAP) -> Trace | None:
    """Trace reaching a non-weakly-sorted terminal, or None if none exists.

    A cap overflow raises CapExceededError (inconclusive), which is distinct
    from an exhaustive None.
    """
    report = explore(initial, variant, state_cap, witness_unsorted=True)
    if report.witness is None:
        return None
    strategy = ScriptedValuesStrategy(report.witness)
    trace = run_to_completion(initial, variant, strategy)
    assert len(trace) == len(report.witness)
    return trace


def adversarial_1mod4(m: int, seed: int = 0) -> Trace:
    """Hold-both-lowest-chips schedule for one-self-loop runs with 4m+1 chips.

    Runs with the two lowest-valued chips held back for as long as legal
    moves allow, then to completion.  The terminal is expected to be
    non-weakly-sorted for every m >= 1.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    variant = Variant("loops_everywhere")
    n = 4 * m + 1
    initial = standard_initial(variant, n)
    low = min(chip.value for _, chip in initial.chips())
    held = [chip.id for _, chip in initial.chips() if chip.value == low]
    trace = run_to_completion(initial, variant, HoldStrategy(held), seed=seed,
                              n=n, preset="origin")
    return trace
