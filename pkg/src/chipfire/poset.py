"""Firing-order poset of the unlabeled process.

Move enabling depends only on chip counts, so the reachable state space of
fire-count vectors (one counter per site) captures every legal schedule at
once.  A move instance ``(site, occurrence)`` must precede another exactly
when no reachable state has the second done but not the first; that
containment test over the materialized space yields the full precedence
relation, its transitive reduction (the Hasse diagram), and the grid-shape
checks on the diamond of final moves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import closedform
from ._kernels import fire_count_expand
from .engine import CapExceededError, ChipFiringError
from .variants import Variant

DEFAULT_STATE_CAP = 5_000_000


class MoveInstance(NamedTuple):
    """The j-th firing move at a site, indexed from both ends of the run."""
    site: int
    occ_from_start: int
    occ_from_last: int

    def node_id(self) -> str:
        return f"s{self.site}_j{self.occ_from_last}"


@dataclass
class FireCountSpace:
    """All reachable fire-count vectors for an origin-preset run."""

    variant: Variant
    n: int
    sites: tuple[int, ...]            # window of sites that ever fire
    totals: np.ndarray                # (W,) int64, fires per window site
    initial: np.ndarray               # (W,) int64, chips initially per window site
    states: np.ndarray                # (N, W) int16

    def __post_init__(self):
        self._idx = {s: i for i, s in enumerate(self.sites)}

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    def total_fires(self, site: int) -> int:
        i = self._idx.get(site)
        return int(self.totals[i]) if i is not None else 0

    def move(self, site: int, occ_from_start: int | None = None,
             occ_from_last: int | None = None) -> MoveInstance:
        f = self.total_fires(site)
        if occ_from_start is None:
            occ_from_start = f - occ_from_last + 1
        if occ_from_last is None:
            occ_from_last = f - occ_from_start + 1
        if not (1 <= occ_from_start <= f):
            raise ValueError(f"site {site} fires {f} times, no occurrence {occ_from_start}")
        return MoveInstance(site, occ_from_start, occ_from_last)

    def nodes(self) -> list[MoveInstance]:
        out = []
        for site in self.sites:
            for j in range(1, self.total_fires(site) + 1):
                out.append(self.move(site, occ_from_start=j))
        return out

    def done_vector(self, move: MoveInstance) -> np.ndarray:
        """Boolean over states: has this move already happened."""
        return self.states[:, self._idx[move.site]] >= move.occ_from_start

    def chips_vector(self, site: int) -> np.ndarray:
        """Chip count at ``site`` in every state, by linear flow balance."""
        v = self.variant
        c = self.states.astype(np.int64)
        out = np.full(self.n_states, self.initial[self._idx[site]] if site in self._idx
                      else (self.n if site == 0 else 0), np.int64)
        if site - 1 in self._idx:
            out += v.right_mult(site - 1) * c[:, self._idx[site - 1]]
        if site + 1 in self._idx:
            out += v.left_mult(site + 1) * c[:, self._idx[site + 1]]
        if site in self._idx:
            out -= (v.left_mult(site) + v.right_mult(site)) * c[:, self._idx[site]]
        return out


def chips_at(state: dict[int, int], site: int, variant: Variant,
             initial: dict[int, int]) -> int:
    """Chip count at ``site`` after the fires recorded in ``state``."""
    val = (initial.get(site, 0)
           + variant.right_mult(site - 1) * state.get(site - 1, 0)
           + variant.left_mult(site + 1) * state.get(site + 1, 0)
           - (variant.left_mult(site) + variant.right_mult(site)) * state.get(site, 0))
    if val < 0:
        raise ChipFiringError(f"negative chip count {val} at site {site}: corrupt state")
    return val


def reachable_states(variant: Variant, n: int,
                     state_cap: int = DEFAULT_STATE_CAP) -> FireCountSpace:
    """Breadth-first closure of all fire-count vectors reachable from zero.

    Each move raises the total fire count by one, so levels are graded and
    deduplication never needs to look across levels.  Raises CapExceededError
    (without partial results) when the cap is hit, and ChipFiringError if the
    dynamics contradict the closed-form window or totals.
    """
    table = closedform.fire_count_table(variant, n)
    sites = tuple(sorted(table))
    w = len(sites)
    totals = np.array([table[s] for s in sites], np.int64)
    initial = np.array([n if s == 0 else 0 for s in sites], np.int64)
    if w == 0:
        return FireCountSpace(variant, n, sites, totals, initial,
                              np.zeros((1, 0), np.int16))
    leftx = np.empty(w + 2, np.int64)
    rightx = np.empty(w + 2, np.int64)
    threshx = np.empty(w + 2, np.int64)
    for j in range(-1, w + 1):
        site = sites[0] + j
        leftx[j + 1] = variant.left_mult(site)
        rightx[j + 1] = variant.right_mult(site)
        threshx[j + 1] = variant.threshold(site)

    frontier = np.zeros((1, w), np.int16)
    levels = [frontier]
    visited = 1
    while True:
        out = np.empty((frontier.shape[0] * w, w), np.int16)
        had_succ = np.empty(frontier.shape[0], np.uint8)
        m, err = fire_count_expand(frontier, initial, leftx, rightx, threshx,
                                   totals, out, had_succ)
        if err == 1:
            raise ChipFiringError("a site outside the closed-form window became enabled")
        if err == 2:
            raise ChipFiringError("a site exceeded its closed-form total fire count")
        if err == 3:
            raise ChipFiringError("negative chip count reached: corrupt state space")
        if m == 0:
            if frontier.shape[0] != 1:
                raise ChipFiringError(
                    f"{frontier.shape[0]} distinct terminal fire-count states; expected 1")
            break
        if not had_succ.all():
            raise ChipFiringError("a non-final state had no successors (premature deadlock)")
        frontier = np.unique(out[:m], axis=0)
        visited += frontier.shape[0]
        if visited > state_cap:
            raise CapExceededError(
                f"fire-count space exceeded {state_cap} states", states_visited=visited)
        levels.append(frontier)
    states = np.vstack(levels)
    space = FireCountSpace(variant, n, sites, totals, initial, states)
    terminal = states[-frontier.shape[0]:][0]
    if not np.array_equal(terminal.astype(np.int64), totals):
        raise ChipFiringError("terminal fire-count state differs from closed-form totals")
    return space


# --- precedence relation ----------------------------------------------------

def _packed_done(space: FireCountSpace, nodes: list[MoveInstance]) -> np.ndarray:
    bits = np.empty((len(nodes), space.n_states), np.bool_)
    for i, node in enumerate(nodes):
        bits[i] = space.done_vector(node)
    return np.packbits(bits, axis=1)


def must_precede(a: MoveInstance, b: MoveInstance, space: FireCountSpace) -> bool:
    """True iff no reachable state has ``b`` done while ``a`` is not."""
    da = space.done_vector(a)
    db = space.done_vector(b)
    return not bool(np.any(db & ~da))


@dataclass
class FiringPoset:
    """Move instances with the full must-precede relation and its Hasse diagram."""

    variant: Variant
    n: int
    nodes: tuple[MoveInstance, ...]
    relation: frozenset[tuple[MoveInstance, MoveInstance]]
    covers: frozenset[tuple[MoveInstance, MoveInstance]]
    totals: dict[int, int] = field(default_factory=dict)

    def precedes(self, a: MoveInstance, b: MoveInstance) -> bool:
        return (a, b) in self.relation


def build_poset(space: FireCountSpace) -> FiringPoset:
    """Full precedence relation over all move instances, plus cover edges.

    ``a`` precedes ``b`` iff the set of states where ``b`` is done is
    contained in the set where ``a`` is done; containment is checked on
    bit-packed done vectors.
    """
    nodes = space.nodes()
    packed = _packed_done(space, nodes)
    k = len(nodes)
    rel_idx: set[tuple[int, int]] = set()
    for i in range(k):
        not_i = ~packed[i]
        for j in range(k):
            if i != j and not np.any(packed[j] & not_i):
                rel_idx.add((i, j))
    relation = frozenset((nodes[i], nodes[j]) for i, j in rel_idx)
    succs: dict[int, set[int]] = {i: set() for i in range(k)}
    for i, j in rel_idx:
        succs[i].add(j)
    covers = frozenset(
        (nodes[i], nodes[j])
        for i, j in rel_idx
        if not any((c, j) in rel_idx for c in succs[i] if c != j)
    )
    totals = {s: space.total_fires(s) for s in space.sites}
    return FiringPoset(space.variant, space.n, tuple(nodes), relation, covers, totals)


# --- diamond coordinates ----------------------------------------------------

def diamond_m(variant: Variant, n: int) -> int:
    """Half-width of the diamond of final moves, where one exists."""
    if variant.kind == "exponential":
        raise closedform.UnsupportedVariantError(
            "the exponential variant has a full-poset grid, not a diamond")
    return closedform.derive_m(variant, n)


def is_diamond_node(site: int, occ_from_last: int, m: int) -> bool:
    return 1 <= occ_from_last <= m - abs(site)


def coord_to_move(space: FireCountSpace, x: int, y: int) -> MoveInstance:
    """Diamond coordinates: (0,0) is the last move at the origin; +x steps one
    site right, +y one site left, along moves of the final grid."""
    return space.move(x - y, occ_from_last=min(x, y) + 1)


def move_to_coord(move: MoveInstance, m: int) -> tuple[int, int]:
    j = move.occ_from_last - 1
    if move.site >= 0:
        return move.site + j, j
    return j, j - move.site


# --- structure checks -------------------------------------------------------

@dataclass
class CheckReport:
    check: str
    violations: list[dict]
    states_explored: int
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "violations": self.violations,
            "states_explored": self.states_explored,
            "passed": self.passed,
            **self.details,
        }


def check_grid_structure(space: FireCountSpace) -> CheckReport:
    """Verify the m-by-m grid of final moves.

    For every diamond coordinate (x, y): (i) the moves one step up the grid
    must precede it, and (ii) whenever it is the next move at its site and
    the site is enabled, exactly threshold chips are present.  Violations are
    reported as data; for odd n the exact-chip clause is expected to fail at
    the last move at the origin with a 3-chip witness.
    """
    m = diamond_m(space.variant, space.n)
    violations: list[dict] = []
    chips_cache: dict[int, np.ndarray] = {}
    for x in range(m):
        for y in range(m):
            node = coord_to_move(space, x, y)
            for above in ((x + 1, y), (x, y + 1)):
                if max(above) <= m - 1:
                    pred = coord_to_move(space, *above)
                    if not must_precede(pred, node, space):
                        violations.append({
                            "node": node.node_id(), "clause": "precedence",
                            "detail": f"{pred.node_id()} does not always precede {node.node_id()}",
                        })
            site = node.site
            if site not in chips_cache:
                chips_cache[site] = space.chips_vector(site)
            chips = chips_cache[site]
            th = space.variant.threshold(site)
            idx = space._idx[site]
            sel = ((space.states[:, idx] == node.occ_from_start - 1)
                   & (chips >= th) & (chips != th))
            if np.any(sel):
                witness = int(np.flatnonzero(sel)[0])
                violations.append({
                    "node": node.node_id(), "clause": "exact_chips",
                    "detail": f"fires with {int(chips[sel].max())} chips present",
                    "chips": int(chips[sel].max()),
                    "witness_state": {str(s): int(v) for s, v in
                                      zip(space.sites, space.states[witness])},
                })
    return CheckReport("grid", violations, space.n_states,
                       {"m": m, "diamond_nodes": m * m})


def check_exponential_grid(space: FireCountSpace) -> CheckReport:
    """Verify the full-poset grid of the exponential variant.

    The j-th move at site k must fall between moves j+1 and j+2 at the
    neighbor one step toward the origin.  The move index j is ambiguous
    between counting from the start and from the end of a site's run, so
    both readings are evaluated and the one the data satisfies is reported
    as canonical.  Additionally every move except the first at each site in
    [-t, t] must fire with exactly threshold chips present.
    """
    if space.variant.kind != "exponential":
        raise closedform.UnsupportedVariantError("exponential grid check needs the exponential variant")
    t = space.variant.t
    sandwich: dict[str, list[dict]] = {"occ_from_start": [], "occ_from_last": []}
    for indexing in sandwich:
        for site in space.sites:
            if site == 0:
                continue
            nb = site - 1 if site > 0 else site + 1
            f_site = space.total_fires(site)
            for j in range(1, f_site + 1):
                if indexing == "occ_from_start":
                    mid = space.move(site, occ_from_start=j)
                    lo = space.move(nb, occ_from_start=j + 1)
                    hi = space.move(nb, occ_from_start=j + 2)
                else:
                    mid = space.move(site, occ_from_last=j)
                    lo = space.move(nb, occ_from_last=j + 1)
                    hi = space.move(nb, occ_from_last=j + 2)
                if not must_precede(lo, mid, space):
                    sandwich[indexing].append({
                        "node": mid.node_id(), "clause": "sandwich_lower",
                        "detail": f"{lo.node_id()} does not always precede {mid.node_id()}"})
                if not must_precede(mid, hi, space):
                    sandwich[indexing].append({
                        "node": mid.node_id(), "clause": "sandwich_upper",
                        "detail": f"{mid.node_id()} does not always precede {hi.node_id()}"})
    exact: list[dict] = []
    for site in space.sites:
        if abs(site) > t:
            continue
        chips = space.chips_vector(site)
        th = space.variant.threshold(site)
        idx = space._idx[site]
        for occ in range(2, space.total_fires(site) + 1):
            sel = (space.states[:, idx] == occ - 1) & (chips >= th) & (chips != th)
            if np.any(sel):
                exact.append({
                    "node": space.move(site, occ_from_start=occ).node_id(),
                    "clause": "exact_chips",
                    "detail": f"fires with {int(chips[sel].max())} chips present"})
    readings_ok = {k: not v for k, v in sandwich.items()}
    canonical = next((k for k, ok in readings_ok.items() if ok), None)
    violations = exact + (sandwich[canonical] if canonical else
                          sandwich["occ_from_start"])
    return CheckReport("expgrid", violations, space.n_states, {
        "t": t,
        "sandwich_ok_from_start": readings_ok["occ_from_start"],
        "sandwich_ok_from_last": readings_ok["occ_from_last"],
        "canonical_indexing": canonical,
    })


def export_dot(poset: FiringPoset) -> str:
    """Graphviz DOT of the Hasse diagram, edges oriented earlier -> later."""
    try:
        m = diamond_m(poset.variant, poset.n)
    except closedform.UnsupportedVariantError:
        m = None
    lines = ["digraph firing_poset {"]
    for node in sorted(poset.nodes):
        attrs = [f'label="{node.site}_{node.occ_from_last}"']
        if m is not None and is_diamond_node(node.site, node.occ_from_last, m):
            attrs.append('group="diamond"')
        lines.append(f'  "{node.node_id()}" [{", ".join(attrs)}];')
    for a, b in sorted(poset.covers):
        lines.append(f'  "{a.node_id()}" -> "{b.node_id()}";')
    lines.append("}")
    return "\n".join(lines)
