"""Trace-level checkers: position bounds, counting bounds, sortedness.

Every checker replays a complete trace and returns the full list of
violations (empty on success).  Applying a checker to a variant outside its
scope raises CheckerNotApplicableError; it never passes silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, floor

from . import closedform
from .engine import ChipFiringError, LabeledConfiguration, Trace
from .variants import Variant


class CheckerNotApplicableError(ChipFiringError):
    """The trace's variant/shape is outside this checker's scope."""


@dataclass(frozen=True)
class BoundViolation:
    step: int
    chip_id: int | None
    chip_value: int | None
    site: int | None
    lemma: str
    bound: int

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "chip_id": self.chip_id,
            "chip_value": self.chip_value,
            "site": self.site,
            "lemma": self.lemma,
            "bound": self.bound,
        }


def violations_to_json(violations: list[BoundViolation]) -> list[dict]:
    return [v.to_json() for v in violations]


def is_weakly_sorted(config: LabeledConfiguration) -> bool:
    """True iff every lower-valued chip sits at or left of every higher-valued one."""
    flat = [chip.value for _, chip in config.chips()]
    return all(a <= b for a, b in zip(flat, flat[1:]))


def check_conservation(trace: Trace) -> list[BoundViolation]:
    """Chip count and drift-corrected weighted position sum after every step.

    After a prefix with fire counts c, the weighted sum of positions equals
    its initial value plus sum_s c[s] * (right_mult(s) - left_mult(s)); the
    drift term vanishes for left/right-symmetric variants.
    """
    v = trace.variant
    total0 = trace.initial.total_chips()
    weighted0 = trace.initial.weighted_sum()
    out = []
    fires: dict[int, int] = {}
    for _, rec, after in trace.replay(verify=False):
        fires[rec.site] = fires.get(rec.site, 0) + 1
        if after.total_chips() != total0:
            out.append(BoundViolation(rec.step, None, None, rec.site,
                                      "chip_conservation", total0))
        drift = sum(c * (v.right_mult(s) - v.left_mult(s)) for s, c in fires.items())
        if after.weighted_sum() != weighted0 + drift:
            out.append(BoundViolation(rec.step, None, None, rec.site,
                                      "weighted_sum", weighted0 + drift))
    return out


def check_chip_bounds(trace: Trace) -> list[BoundViolation]:
    """Per-step position bounds on the line without loops.

    A chip valued k < 0 never sits right of k + m, and a chip valued k > 0
    never sits left of k - m; with edge multiplicity r the r chips sharing a
    value share the bound.
    """
    v = trace.variant
    if v.kind not in ("base", "multi_edge"):
        raise CheckerNotApplicableError(f"chip bounds apply to base/multi_edge, not {v.kind}")
    n = trace.initial.total_chips()
    m = closedform.derive_m(v, n) if v.kind == "multi_edge" else n // 2
    out = []

    def scan(config, step):
        for site, chip in config.chips():
            if chip.value < 0 and site > chip.value + m:
                out.append(BoundViolation(step, chip.id, chip.value, site,
                                          "chip_bounds", chip.value + m))
            elif chip.value > 0 and site < chip.value - m:
                out.append(BoundViolation(step, chip.id, chip.value, site,
                                          "chip_bounds", chip.value - m))

    scan(trace.initial, -1)
    for _, rec, after in trace.replay(verify=False):
        scan(after, rec.step)
    return out


def check_loop_bounds(trace: Trace) -> list[BoundViolation]:
    """Per-step position bounds for the one-self-loop-per-site variant, n = 4m-1.

    A chip valued k > 0 stays within [floor((k-m)/2), floor((k+m)/2)], a chip
    valued k < 0 within [ceil((k-m)/2), ceil((k+m)/2)], and chip 0 within
    [ceil(-m/2), floor(m/2)].

    Extreme-occupancy clause: when k+m is odd the chips valued >= k, with
    all smaller chips removed, form a process whose terminal has a single
    chip at its leftmost slot, so at most one chip valued >= k may sit at or
    left of floor((k-m)/2) at any time (mirrored for values <= -k).  When
    k+m is even that slot holds two chips and two may sit there; verified
    exhaustively over all reachable states at n = 7 and n = 11.
    """
    v = trace.variant
    if v.kind != "loops_everywhere":
        raise CheckerNotApplicableError(f"loop bounds apply to loops_everywhere, not {v.kind}")
    n = trace.initial.total_chips()
    if n % 4 != 3:
        raise CheckerNotApplicableError(f"loop bounds need n = 4m - 1, got n={n}")
    m = (n + 1) // 4
    out = []

    def limits(k: int) -> tuple[int, int]:
        if k > 0:
            return floor((k - m) / 2), floor((k + m) / 2)
        if k < 0:
            return ceil((k - m) / 2), ceil((k + m) / 2)
        return ceil(-m / 2), floor(m / 2)

    def scan(config, step):
        chips = [(chip.value, site) for site, chip in config.chips()]
        for site, chip in config.chips():
            lo, hi = limits(chip.value)
            if site < lo or site > hi:
                out.append(BoundViolation(step, chip.id, chip.value, site,
                                          "loop_bounds", lo if site < lo else hi))
        for k in range(1, m + 1):
            if (k + m) % 2 == 0:
                continue
            low_extreme = floor((k - m) / 2)
            cnt = sum(1 for value, site in chips if value >= k and site <= low_extreme)
            if cnt > 1:
                out.append(BoundViolation(step, None, k, low_extreme,
                                          "loop_bounds_extremes", 1))
            high_extreme = ceil((m - k) / 2)
            cnt = sum(1 for value, site in chips if value <= -k and site >= high_extreme)
            if cnt > 1:
                out.append(BoundViolation(step, None, -k, high_extreme,
                                          "loop_bounds_extremes", 1))

    scan(trace.initial, -1)
    for _, rec, after in trace.replay(verify=False):
        scan(after, rec.step)
    return out


def _diamond_coord(site: int, occ_from_last: int) -> tuple[int, int]:
    j = occ_from_last - 1
    if site >= 0:
        return site + j, j
    return j, j - site


def _iter_moves_with_occurrence(trace: Trace):
    """Yield (before, rec, after, occ_from_start) over the trace."""
    fires: dict[int, int] = {}
    for before, rec, after in trace.replay(verify=False):
        fires[rec.site] = fires.get(rec.site, 0) + 1
        yield before, rec, after, fires[rec.site]


def check_diamond_move_bounds(trace: Trace) -> list[BoundViolation]:
    """Chip positions immediately before each diamond move, base variant, even n.

    Right before the diamond move with grid coordinates (x, y) fires at site
    s = x - y, the chip valued -(y+1) must sit at or left of s and the chip
    valued x+1 at or right of s.
    """
    v = trace.variant
    n = trace.initial.total_chips()
    if v.kind != "base" or n % 2 != 0:
        raise CheckerNotApplicableError("diamond move bounds apply to the base variant with even n")
    m = n // 2
    table = closedform.fire_count_table(v, n)
    by_value = {chip.value: chip.id for _, chip in trace.initial.chips()}
    out = []
    for before, rec, after, occ in _iter_moves_with_occurrence(trace):
        occ_from_last = table[rec.site] - occ + 1
        if 1 <= occ_from_last <= m - abs(rec.site):
            x, y = _diamond_coord(rec.site, occ_from_last)
            positions = before.positions()
            neg_pos = positions[by_value[-(y + 1)]]
            if neg_pos > rec.site:
                out.append(BoundViolation(rec.step, by_value[-(y + 1)], -(y + 1),
                                          neg_pos, "diamond_move_bounds", rec.site))
            pos_pos = positions[by_value[x + 1]]
            if pos_pos < rec.site:
                out.append(BoundViolation(rec.step, by_value[x + 1], x + 1,
                                          pos_pos, "diamond_move_bounds", rec.site))
    return out


def check_diamond_count_bounds(trace: Trace) -> list[BoundViolation]:
    """Counting bound after each diamond move, one-self-loop variant, n = 4m-1.

    After the j-th diamond move at site k <= 0 there are at least j+k+m-1
    chips valued below k at positions left of k; mirrored for k >= 0.
    """
    v = trace.variant
    n = trace.initial.total_chips()
    if v.kind != "loops_everywhere" or n % 4 != 3:
        raise CheckerNotApplicableError("diamond count bounds apply to loops_everywhere with n = 4m - 1")
    m = (n + 1) // 4
    table = closedform.fire_count_table(v, n)
    out = []
    for before, rec, after, occ in _iter_moves_with_occurrence(trace):
        k = rec.site
        f = table.get(k, 0)
        diamond_width = m - abs(k)
        j = occ - (f - diamond_width)
        if j < 1:
            continue
        chips = list(after.chips())
        if -m + 1 <= k <= 0:
            have = sum(1 for site, chip in chips if chip.value < k and site < k)
            need = j + k + m - 1
            if have < need:
                out.append(BoundViolation(rec.step, None, None, k,
                                          "diamond_count_bounds", need))
        if 0 <= k <= m - 1:
            have = sum(1 for site, chip in chips if chip.value > k and site > k)
            need = j - k + m - 1
            if have < need:
                out.append(BoundViolation(rec.step, None, None, k,
                                          "diamond_count_bounds", need))
    return out


@dataclass
class DiamondConfigurationView:
    """First diamond move each chip attended, and the site where it happened."""

    variant: Variant
    n: int
    m: int
    # chip id -> (value, site of first attended diamond move, occ_from_start)
    assignment: dict[int, tuple[int, int, int]]

    def site_of(self, chip_id: int) -> int:
        return self.assignment[chip_id][1]

    def induced_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for _, site, _ in self.assignment.values():
            counts[site] = counts.get(site, 0) + 1
        return dict(sorted(counts.items()))


def diamond_configuration(trace: Trace) -> DiamondConfigurationView:
    """Assign each chip to the site of the first diamond move it is present at.

    Present means sitting at the firing site when the move executes, chosen
    or not.  Raises if some chip never attends a diamond move.
    """
    v = trace.variant
    n = trace.initial.total_chips()
    try:
        m = closedform.derive_m(v, n)
    except closedform.UnsupportedVariantError as exc:
        raise CheckerNotApplicableError(str(exc))
    if v.kind == "exponential":
        raise CheckerNotApplicableError("the exponential variant has no diamond")
    table = closedform.fire_count_table(v, n)
    assignment: dict[int, tuple[int, int, int]] = {}
    for before, rec, after, occ in _iter_moves_with_occurrence(trace):
        occ_from_last = table[rec.site] - occ + 1
        if 1 <= occ_from_last <= m - abs(rec.site):
            for chip in before.chips_at(rec.site):
                if chip.id not in assignment:
                    assignment[chip.id] = (chip.value, rec.site, occ)
    if len(assignment) != n:
        raise ChipFiringError(
            f"only {len(assignment)} of {n} chips attended a diamond move")
    return DiamondConfigurationView(v, n, m, assignment)


def check_diamond_config_bounds(view: DiamondConfigurationView) -> list[BoundViolation]:
    """Counting bound on the diamond configuration, one-self-loop variant.

    For k in [-m-1, 0] and l in [0, k+m-1]: at most k+m-l-1 chips valued
    below k are assigned to sites right of l; mirrored on the positive side.
    """
    if view.variant.kind != "loops_everywhere" or view.n % 4 != 3:
        raise CheckerNotApplicableError("diamond config bounds apply to loops_everywhere with n = 4m - 1")
    m = view.m
    entries = list(view.assignment.values())
    out = []
    for k in range(-m - 1, 1):
        for l in range(0, k + m):
            limit = k + m - l - 1
            low = sum(1 for value, site, _ in entries if value < k and site > l)
            if low > limit:
                out.append(BoundViolation(-1, None, k, l, "diamond_config_bounds", limit))
            high = sum(1 for value, site, _ in entries if value > -k and site < -l)
            if high > limit:
                out.append(BoundViolation(-1, None, -k, -l, "diamond_config_bounds", limit))
    return out
