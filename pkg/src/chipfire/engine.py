"""Labeled chip-firing engine.

Chips carry an immutable integer value and a unique id.  A firing move at
site ``i`` chooses ``threshold(i)`` chips there, orders them by
``(value, id)``, and sends the smallest ``left_mult`` to ``i-1``, keeps the
middle ``loop_mult`` at ``i``, and sends the largest ``right_mult`` to
``i+1``.  Ties between equal values are broken by chip id (lower id fires
left), so every run is reproducible from its seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, IO, Iterable, Iterator, NamedTuple

import numpy as np

from . import closedform
from .variants import Variant

DEFAULT_MOVE_CAP = 10 ** 7


class ChipFiringError(Exception):
    pass


class IllegalMoveError(ChipFiringError):
    """A move violated a precondition (site not enabled / chip absent / wrong cardinality)."""


class NonTerminationError(ChipFiringError):
    """A run exceeded its move cap without reaching a terminal configuration."""


class CapExceededError(ChipFiringError):
    """A search exceeded its state cap; partial results are not returned."""

    def __init__(self, message: str, states_visited: int = 0):
        super().__init__(message)
        self.states_visited = states_visited


class Chip(NamedTuple):
    id: int
    value: int


def _chip_key(chip: Chip) -> tuple[int, int]:
    return (chip.value, chip.id)


class LabeledConfiguration:
    """Sparse mapping from site to the chips currently there.

    Instances are immutable: applying a move returns a new configuration.
    """

    __slots__ = ("occupancy",)

    def __init__(self, occupancy: dict[int, Iterable[Chip]]):
        self.occupancy: dict[int, tuple[Chip, ...]] = {
            site: tuple(sorted(chips, key=_chip_key))
            for site, chips in occupancy.items()
            if chips
        }

    @classmethod
    def from_values(cls, values_by_site: dict[int, Iterable[int]]) -> "LabeledConfiguration":
        """Assign fresh ids 0, 1, ... in (site, value) order."""
        occ: dict[int, list[Chip]] = {}
        next_id = 0
        for site in sorted(values_by_site):
            for value in sorted(values_by_site[site]):
                occ.setdefault(site, []).append(Chip(next_id, value))
                next_id += 1
        return cls(occ)

    def chips(self) -> Iterator[tuple[int, Chip]]:
        for site in sorted(self.occupancy):
            for chip in self.occupancy[site]:
                yield site, chip

    def chips_at(self, site: int) -> tuple[Chip, ...]:
        return self.occupancy.get(site, ())

    def count_at(self, site: int) -> int:
        return len(self.occupancy.get(site, ()))

    def values_at(self, site: int) -> tuple[int, ...]:
        return tuple(sorted(c.value for c in self.occupancy.get(site, ())))

    def values_by_site(self) -> dict[int, tuple[int, ...]]:
        return {site: self.values_at(site) for site in sorted(self.occupancy)}

    def positions(self) -> dict[int, int]:
        return {chip.id: site for site, chip in self.chips()}

    def total_chips(self) -> int:
        return sum(len(v) for v in self.occupancy.values())

    def weighted_sum(self) -> int:
        return sum(site * len(chips) for site, chips in self.occupancy.items())

    def enabled_sites(self, variant: Variant) -> list[int]:
        return sorted(site for site, chips in self.occupancy.items()
                      if len(chips) >= variant.threshold(site))

    def apply(self, variant: Variant, site: int, chosen_ids: Iterable[int]) -> "LabeledConfiguration":
        """Fire ``chosen_ids`` at ``site``; raises IllegalMoveError on bad input."""
        chosen = tuple(chosen_ids)
        present = self.occupancy.get(site, ())
        th = variant.threshold(site)
        if len(present) < th:
            raise IllegalMoveError(f"site {site} not enabled: {len(present)} chips < threshold {th}")
        if len(set(chosen)) != len(chosen) or len(chosen) != th:
            raise IllegalMoveError(f"move at site {site} must choose {th} distinct chips, got {chosen}")
        by_id = {c.id: c for c in present}
        missing = [i for i in chosen if i not in by_id]
        if missing:
            raise IllegalMoveError(f"chips {missing} absent from site {site}")
        fired = sorted((by_id[i] for i in chosen), key=_chip_key)
        left, loop, right = variant.split(site)
        occ = dict(self.occupancy)
        keep = tuple(c for c in present if c.id not in set(chosen))
        stay = tuple(fired[left:left + loop])
        occ[site] = keep + stay
        occ[site - 1] = self.occupancy.get(site - 1, ()) + tuple(fired[:left])
        occ[site + 1] = self.occupancy.get(site + 1, ()) + tuple(fired[left + loop:])
        return LabeledConfiguration(occ)

    def __eq__(self, other):
        return isinstance(other, LabeledConfiguration) and self.occupancy == other.occupancy

    def __hash__(self):
        return hash(tuple(sorted(self.occupancy.items())))

    def __repr__(self):
        inner = ", ".join(f"{site}: {sorted(c.value for c in chips)}"
                          for site, chips in sorted(self.occupancy.items()))
        return f"LabeledConfiguration({{{inner}}})"


def standard_initial(variant: Variant, n: int, preset: str = "origin") -> LabeledConfiguration:
    """Canonical initial configuration.

    ``origin`` puts n chips with the variant's canonical label multiset at
    site 0.  ``staircase`` (base variant only) puts 2n+1 chips: values
    -n..-1 at site -1 and 1..n+1 at site 0.
    """
    if preset == "origin":
        values = closedform.canonical_labels(variant, n)
        return LabeledConfiguration.from_values({0: values})
    if preset == "staircase":
        if variant.kind != "base":
            raise closedform.UnsupportedVariantError("staircase preset exists only for the base variant")
        return LabeledConfiguration.from_values({
            -1: range(-n, 0),
            0: range(1, n + 2),
        })
    raise closedform.UnsupportedVariantError(f"unknown preset {preset!r}")


@dataclass(frozen=True)
class Move:
    site: int
    chosen: tuple[int, ...]  # chip ids
    step_index: int


@dataclass(frozen=True)
class MoveRecord:
    """A move plus the metadata captured when it fired."""
    step: int
    site: int
    chosen_ids: tuple[int, ...]
    chosen_values: tuple[int, ...]
    present_before: int
    present_ids: tuple[int, ...]
    fire_index_at_site: int

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "site": self.site,
            "chosen_values": list(self.chosen_values),
            "chosen_ids": list(self.chosen_ids),
            "present_before": self.present_before,
            "fire_index_at_site": self.fire_index_at_site,
        }


@dataclass
class Trace:
    """An initial configuration plus the ordered moves of one complete run."""

    variant: Variant
    initial: LabeledConfiguration
    records: list[MoveRecord]
    strategy: str
    seed: int
    n: int | None = None
    preset: str | None = None
    _final: LabeledConfiguration | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.records)

    def replay(self, verify: bool = True) -> Iterator[tuple[LabeledConfiguration, MoveRecord, LabeledConfiguration]]:
        """Yield (state_before, record, state_after) for every move.

        With ``verify`` the recorded metadata is re-derived and compared; any
        mismatch raises ChipFiringError.
        """
        config = self.initial
        fires: dict[int, int] = {}
        for rec in self.records:
            before = config
            if verify:
                present = config.chips_at(rec.site)
                by_id = {c.id: c for c in present}
                values = tuple(sorted(by_id[i].value for i in rec.chosen_ids if i in by_id))
                ok = (len(present) == rec.present_before
                      and tuple(sorted(c.id for c in present)) == rec.present_ids
                      and values == tuple(sorted(rec.chosen_values))
                      and fires.get(rec.site, 0) + 1 == rec.fire_index_at_site)
                if not ok:
                    raise ChipFiringError(f"replay mismatch at step {rec.step}: {rec}")
            config = config.apply(self.variant, rec.site, rec.chosen_ids)
            fires[rec.site] = fires.get(rec.site, 0) + 1
            yield before, rec, config
        if verify and config.enabled_sites(self.variant):
            raise ChipFiringError("trace does not end in a terminal configuration")

    def final_config(self) -> LabeledConfiguration:
        if self._final is None:
            config = self.initial
            for rec in self.records:
                config = config.apply(self.variant, rec.site, rec.chosen_ids)
            self._final = config
        return self._final

    def fire_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for rec in self.records:
            counts[rec.site] = counts.get(rec.site, 0) + 1
        return dict(sorted(counts.items()))

    def header_json(self) -> dict:
        return {
            "variant": self.variant.to_json(),
            "n": self.initial.total_chips() if self.n is None else self.n,
            "preset": self.preset,
            "strategy": self.strategy,
            "seed": self.seed,
            "initial": {str(site): list(values)
                        for site, values in self.initial.values_by_site().items()},
        }

    def write_jsonl(self, fp: IO[str]):
        fp.write(json.dumps(self.header_json()) + "\n")
        for rec in self.records:
            fp.write(json.dumps(rec.to_json()) + "\n")

    @classmethod
    def read_jsonl(cls, fp: IO[str]) -> "Trace":
        """Rebuild a trace from the JSON-lines format.

        Chip ids are reassigned in (site, value) order, then each recorded
        move is re-bound to ids by value at its site (lowest ids first), so
        a round-tripped trace replays to the same value-level run.
        """
        header = json.loads(fp.readline())
        variant = Variant.from_json(header["variant"])
        initial = LabeledConfiguration.from_values(
            {int(site): values for site, values in header["initial"].items()})
        config = initial
        records = []
        fires: dict[int, int] = {}
        for line in fp:
            if not line.strip():
                continue
            d = json.loads(line)
            site = d["site"]
            ids = _ids_for_values(config, site, d["chosen_values"])
            present = config.chips_at(site)
            records.append(MoveRecord(
                step=d["step"], site=site, chosen_ids=ids,
                chosen_values=tuple(d["chosen_values"]),
                present_before=len(present),
                present_ids=tuple(sorted(c.id for c in present)),
                fire_index_at_site=fires.get(site, 0) + 1,
            ))
            fires[site] = fires.get(site, 0) + 1
            config = config.apply(variant, site, ids)
        return cls(variant=variant, initial=initial, records=records,
                   strategy=header.get("strategy", "scripted"), seed=header.get("seed", 0),
                   n=header.get("n"), preset=header.get("preset"))


def _ids_for_values(config: LabeledConfiguration, site: int, values: Iterable[int]) -> tuple[int, ...]:
    """Pick chip ids at ``site`` matching the value multiset, lowest ids first."""
    pool: dict[int, list[int]] = {}
    for chip in config.chips_at(site):
        pool.setdefault(chip.value, []).append(chip.id)
    for ids in pool.values():
        ids.sort(reverse=True)
    chosen = []
    for value in sorted(values):
        if value not in pool or not pool[value]:
            raise IllegalMoveError(f"no chip valued {value} available at site {site}")
        chosen.append(pool[value].pop())
    return tuple(sorted(chosen))


# --- strategies ------------------------------------------------------------

class Strategy:
    """Picks the next move given the full configuration and the run RNG."""

    name = "abstract"

    def choose(self, config: LabeledConfiguration, variant: Variant,
               rng: np.random.Generator) -> tuple[int, tuple[int, ...]]:
        raise NotImplementedError


class LeftmostStrategy(Strategy):
    """Fire the smallest enabled site with its threshold lowest (value, id) chips."""

    name = "leftmost"

    def choose(self, config, variant, rng):
        site = config.enabled_sites(variant)[0]
        chips = sorted(config.chips_at(site), key=_chip_key)
        return site, tuple(c.id for c in chips[:variant.threshold(site)])


class RandomStrategy(Strategy):
    """Uniform over enabled sites, then uniform over legal chip subsets."""

    name = "random"

    def choose(self, config, variant, rng):
        enabled = config.enabled_sites(variant)
        site = enabled[int(rng.integers(len(enabled)))]
        ids = np.array(sorted(c.id for c in config.chips_at(site)))
        picked = rng.choice(ids, size=variant.threshold(site), replace=False)
        return site, tuple(sorted(int(i) for i in picked))


class ScriptedStrategy(Strategy):
    """Replay an explicit list of (site, chosen_ids) moves."""

    name = "scripted"

    def __init__(self, moves: Iterable[tuple[int, tuple[int, ...]]]):
        self._moves = list(moves)
        self._pos = 0

    def choose(self, config, variant, rng):
        if self._pos >= len(self._moves):
            raise IllegalMoveError("script exhausted while sites are still enabled")
        site, ids = self._moves[self._pos]
        self._pos += 1
        return site, tuple(ids)


class ScriptedValuesStrategy(Strategy):
    """Replay (site, value-multiset) moves, binding values to lowest free ids."""

    name = "scripted"

    def __init__(self, moves: Iterable[tuple[int, tuple[int, ...]]]):
        self._moves = list(moves)
        self._pos = 0

    def choose(self, config, variant, rng):
        if self._pos >= len(self._moves):
            raise IllegalMoveError("script exhausted while sites are still enabled")
        site, values = self._moves[self._pos]
        self._pos += 1
        return site, _ids_for_values(config, site, values)


class HoldStrategy(Strategy):
    """Keep a designated chip-id set out of play for as long as possible.

    Prefers the leftmost enabled site offering a legal subset disjoint from
    the held set, and fires the threshold lowest non-held chips there.  When
    every enabled site forces held chips, fires at the leftmost enabled site
    using as few held chips as possible.
    """

    name = "hold"

    def __init__(self, held_ids: Iterable[int]):
        self.held = frozenset(held_ids)

    def choose(self, config, variant, rng):
        enabled = config.enabled_sites(variant)
        for site in enabled:
            th = variant.threshold(site)
            free = sorted((c for c in config.chips_at(site) if c.id not in self.held),
                          key=_chip_key)
            if len(free) >= th:
                return site, tuple(c.id for c in free[:th])
        site = enabled[0]
        th = variant.threshold(site)
        chips = sorted(config.chips_at(site), key=lambda c: (c.id in self.held, _chip_key(c)))
        return site, tuple(sorted(c.id for c in chips[:th]))


def make_strategy(name: str, **kwargs) -> Strategy:
    if name == "leftmost":
        return LeftmostStrategy()
    if name == "random":
        return RandomStrategy()
    if name == "hold":
        return HoldStrategy(kwargs.get("held_ids", ()))
    raise ValueError(f"unknown strategy {name!r}")


Observer = Callable[[LabeledConfiguration, MoveRecord, dict], None]


def default_move_cap(variant: Variant, initial: LabeledConfiguration) -> int:
    """10x the known total fire count for origin-preset initials, else 10**7."""
    occ = initial.values_by_site()
    if set(occ) <= {0}:
        try:
            table = closedform.fire_count_table(variant, initial.total_chips())
            return max(10 * sum(table.values()), 1)
        except closedform.UnsupportedVariantError:
            pass
    return DEFAULT_MOVE_CAP


def run_to_completion(initial: LabeledConfiguration, variant: Variant,
                      strategy: Strategy, seed: int = 0,
                      observers: Iterable[Observer] = (),
                      move_cap: int | None = None,
                      n: int | None = None, preset: str | None = None) -> Trace:
    """Fire until no site is enabled and return the full trace.

    Observers are called after every move with (state, record, metadata).
    Raises NonTerminationError if the move cap (default: 10x the known total
    fire count, else 10**7) is exceeded.
    """
    if move_cap is None:
        move_cap = default_move_cap(variant, initial)
    rng = np.random.default_rng(seed)
    config = initial
    records: list[MoveRecord] = []
    fires: dict[int, int] = {}
    observers = tuple(observers)
    while True:
        enabled = config.enabled_sites(variant)
        if not enabled:
            break
        if len(records) >= move_cap:
            raise NonTerminationError(f"exceeded move cap {move_cap} without terminating")
        site, chosen_ids = strategy.choose(config, variant, rng)
        present = config.chips_at(site)
        by_id = {c.id: c for c in present}
        next_config = config.apply(variant, site, chosen_ids)
        fires[site] = fires.get(site, 0) + 1
        rec = MoveRecord(
            step=len(records), site=site,
            chosen_ids=tuple(sorted(chosen_ids)),
            chosen_values=tuple(sorted(by_id[i].value for i in chosen_ids)),
            present_before=len(present),
            present_ids=tuple(sorted(c.id for c in present)),
            fire_index_at_site=fires[site],
        )
        records.append(rec)
        config = next_config
        for obs in observers:
            obs(config, rec, {"fires": dict(fires)})
    trace = Trace(variant=variant, initial=initial, records=records,
                  strategy=strategy.name, seed=seed, n=n, preset=preset)
    trace._final = config
    return trace
