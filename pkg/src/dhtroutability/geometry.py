"""Routing geometries and their distance profiles.

Five greedy-routing geometries over a fully populated d-bit identifier
space (N = 2^d nodes, binary identifiers, bits numbered 1..d from the
most significant):

  tree       prefix-correcting routing, one bucket neighbor per bit
  hypercube  bit-fixing routing over Hamming-distance-1 neighbors
  xor        Kademlia-style greedy routing on the XOR metric
  ring       Chord-style fingers at clockwise offsets [2^(i-1), 2^i)
  symphony   small-world ring with near neighbors plus harmonic shortcuts

The distance profile n(h) counts nodes at routing distance h (hops or
phases) from any root node:

  tree / hypercube / xor : n(h) = C(d, h)      (Hamming distance h)
  ring / symphony        : n(h) = 2^(h-1)      (clockwise phase h)

Both families satisfy sum_h n(h) = 2^d - 1.  For d <= 20 counts are kept
as exact integers; for larger d the profile stores the normalized weights
n(h) / 2^d so downstream sums stay in floating range up to d = 100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

# Largest d for which distance counts are kept as exact integers.
EXACT_PROFILE_MAX_D = 20


class Geometry(str, Enum):
    TREE = "tree"
    HYPERCUBE = "hypercube"
    XOR = "xor"
    RING = "ring"
    SYMPHONY = "symphony"

    def __str__(self) -> str:
        return self.value


#: Geometries whose distance profile is binomial, n(h) = C(d, h).
BINOMIAL_GEOMETRIES = frozenset({Geometry.TREE, Geometry.HYPERCUBE, Geometry.XOR})

#: Geometries whose distance profile is geometric, n(h) = 2^(h-1).
RING_GEOMETRIES = frozenset({Geometry.RING, Geometry.SYMPHONY})

#: Canonical ordering used by reports and the CLI.
ALL_GEOMETRIES = (
    Geometry.TREE,
    Geometry.HYPERCUBE,
    Geometry.XOR,
    Geometry.RING,
    Geometry.SYMPHONY,
)


@dataclass(frozen=True)
class GeometrySpec:
    """A routing geometry plus its parameters.

    d is the identifier length in bits (N = 2^d).  k_n and k_s are the
    Symphony near-neighbor and shortcut counts; they are ignored by the
    other geometries.
    """

    kind: Geometry
    d: int
    k_n: int = 1
    k_s: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.kind, Geometry):
            object.__setattr__(self, "kind", Geometry(self.kind))
        if self.d < 1:
            raise ValueError(f"identifier length d must be >= 1, got {self.d}")
        if self.kind is Geometry.SYMPHONY:
            if self.k_n < 1 or self.k_s < 1:
                raise ValueError("symphony requires k_n >= 1 and k_s >= 1")
            if self.k_s > self.d:
                # The per-phase advance probability k_s/d must stay <= 1.
                raise ValueError("symphony requires k_s <= d")

    @property
    def n_nodes(self) -> int:
        return 1 << self.d


@dataclass(frozen=True)
class DistanceProfile:
    """Node counts per routing distance h = 1..d from a root node.

    ``values[h-1]`` is n(h) exactly (ints) when ``normalized`` is False,
    or the weight n(h)/2^d (floats) when True.
    """

    d: int
    values: tuple
    normalized: bool

    def total(self) -> float:
        """Sum of stored values: 2^d - 1 exact, or 1 - 2^-d normalized."""
        return math.fsum(self.values) if self.normalized else sum(self.values)


def distance_profile(spec: GeometrySpec) -> DistanceProfile:
    """Distance distribution n(h) for the given geometry.

    Exact integer counts for d <= 20; normalized weights n(h)/2^d above
    that so that d up to 100 stays representable.
    """
    d = spec.d
    normalized = d > EXACT_PROFILE_MAX_D
    if spec.kind in BINOMIAL_GEOMETRIES:
        if normalized:
            n = 1 << d
            values = tuple(math.comb(d, h) / n for h in range(1, d + 1))
        else:
            values = tuple(math.comb(d, h) for h in range(1, d + 1))
    else:
        if normalized:
            values = tuple(math.ldexp(1.0, h - 1 - d) for h in range(1, d + 1))
        else:
            values = tuple(1 << (h - 1) for h in range(1, d + 1))
    return DistanceProfile(d=d, values=values, normalized=normalized)
