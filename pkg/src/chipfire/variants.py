"""Graph variants of the chip-firing line.

A variant fixes, for every site of the integer line, the number of edges
to the left neighbor, the number of self-loops, and the number of edges
to the right neighbor.  A firing move at a site consumes
``left + loop + right`` chips: the smallest go one site left, the largest
one site right, and the middle ones stay put.
"""

from __future__ import annotations

from dataclasses import dataclass

KINDS = (
    "base",
    "multi_edge",
    "origin_loops",
    "loops_everywhere",
    "loops_and_edges",
    "exponential",
)


@dataclass(frozen=True)
class Variant:
    """Edge-multiplicity profile of the line graph.

    ``r`` is the edge multiplicity (multi_edge, loops_and_edges), ``s`` the
    number of self-loops at the origin (origin_loops), and ``t`` the decay
    parameter of the exponential variant, where the bundle between sites
    ``k`` and ``k+1`` has multiplicity ``2**(t-k)`` for ``0 <= k <= t``
    (mirrored on the negative side) and 1 farther out.
    """

    kind: str = "base"
    r: int = 1
    s: int = 0
    t: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variant kind {self.kind!r}")
        if self.r < 1:
            raise ValueError("edge multiplicity r must be >= 1")
        if self.s < 0:
            raise ValueError("origin loop count s must be >= 0")
        if self.t < 0:
            raise ValueError("exponential parameter t must be >= 0")

    def bundle(self, j: int) -> int:
        """Multiplicity of the edge bundle between sites ``j`` and ``j+1``."""
        if self.kind in ("multi_edge", "loops_and_edges"):
            return self.r
        if self.kind == "exponential":
            if 0 <= j <= self.t:
                return 2 ** (self.t - j)
            if -self.t - 1 <= j <= -1:
                return 2 ** (self.t + j + 1)
            return 1
        return 1

    def left_mult(self, site: int) -> int:
        return self.bundle(site - 1)

    def right_mult(self, site: int) -> int:
        return self.bundle(site)

    def loop_mult(self, site: int) -> int:
        if self.kind == "origin_loops":
            return self.s if site == 0 else 0
        if self.kind == "loops_everywhere":
            return 1
        if self.kind == "loops_and_edges":
            return self.r
        return 0

    def threshold(self, site: int) -> int:
        """Number of chips a firing move at ``site`` chooses and redistributes."""
        return self.left_mult(site) + self.loop_mult(site) + self.right_mult(site)

    def split(self, site: int) -> tuple[int, int, int]:
        """(left, loop, right) multiplicities at ``site``."""
        return self.left_mult(site), self.loop_mult(site), self.right_mult(site)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("multi_edge", "loops_and_edges"):
            out["r"] = self.r
        elif self.kind == "origin_loops":
            out["s"] = self.s
        elif self.kind == "exponential":
            out["t"] = self.t
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Variant":
        return cls(
            kind=data["kind"],
            r=int(data.get("r", 1)),
            s=int(data.get("s", 0)),
            t=int(data.get("t", 0)),
        )

    def __str__(self):
        extra = {
            "multi_edge": f"(r={self.r})",
            "loops_and_edges": f"(r={self.r})",
            "origin_loops": f"(s={self.s})",
            "exponential": f"(t={self.t})",
        }.get(self.kind, "")
        return self.kind + extra


def base() -> Variant:
    return Variant("base")


def multi_edge(r: int) -> Variant:
    return Variant("multi_edge", r=r)


def origin_loops(s: int) -> Variant:
    return Variant("origin_loops", s=s)


def loops_everywhere() -> Variant:
    return Variant("loops_everywhere")


def loops_and_edges(r: int) -> Variant:
    return Variant("loops_and_edges", r=r)


def exponential(t: int) -> Variant:
    return Variant("exponential", t=t)
