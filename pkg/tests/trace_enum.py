"""Exhaustive enumeration of complete labeled runs (tiny n only)."""

from itertools import combinations

from chipfire.engine import LabeledConfiguration, ScriptedStrategy, run_to_completion


def all_complete_traces(initial: LabeledConfiguration, variant, limit: int = 100_000):
    """Yield one engine Trace per maximal firing sequence from ``initial``."""
    scripts = []

    def dfs(config, moves):
        enabled = config.enabled_sites(variant)
        if not enabled:
            scripts.append(list(moves))
            if len(scripts) > limit:
                raise RuntimeError("trace enumeration exploded")
            return
        for site in enabled:
            ids = sorted(c.id for c in config.chips_at(site))
            for chosen in combinations(ids, variant.threshold(site)):
                moves.append((site, chosen))
                dfs(config.apply(variant, site, chosen), moves)
                moves.pop()

    dfs(initial, [])
    for script in scripts:
        yield run_to_completion(initial, variant, ScriptedStrategy(script))
