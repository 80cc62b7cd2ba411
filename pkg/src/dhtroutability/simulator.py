"""Monte Carlo overlay simulator: concrete topologies, failures, routing.

Builds fully populated overlays (every d-bit identifier hosts a node),
kills nodes independently with probability q, and runs each geometry's
greedy no-back-tracking router over the survivors:

  tree       forward to the unique bucket neighbor correcting the
             leftmost differing bit; dead neighbor means the message drops
  hypercube  forward to any alive neighbor flipping a differing bit
             (lowest-index differing bit breaks ties deterministically)
  xor        forward to the alive neighbor with the smallest XOR distance
             to the target, only when strictly smaller than the current one
  ring       forward to the alive finger with the largest clockwise
             offset that does not overshoot the target
  symphony   forward to the alive link (near neighbor or shortcut) that
             minimizes the remaining clockwise distance without overshooting

Every hop strictly decreases the geometry's distance metric, so routes
are loop-free; a defensive hop cap of 4N aborts a route anyway and is
counted separately.  Randomized construction choices (XOR bucket
suffixes, ring finger offsets, symphony shortcut lengths) derive
deterministically from a 64-bit build seed, and failure patterns and pair
sampling from their own seeds, so identical seeds reproduce bit-identical
outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .geometry import Geometry, GeometrySpec

#: Simulator scale cap; the analytic pipeline alone covers larger d.
SIM_MAX_D = 20

#: Defensive hop cap multiplier (cap = 4 * N).
HOP_CAP_FACTOR = 4

#: Below this node count, adjacency and aliveness are mirrored into
#: plain Python lists for faster routing loops.
_PYTHON_ROWS_MAX_NODES = 1 << 16

FAILED_DEAD_END = "dead_end"
FAILED_HOP_CAP = "hop_cap"


class SimSeeds(NamedTuple):
    """Independent 64-bit seeds for overlay builds, failures and pairs."""

    build: int
    fail: int
    pair: int


class Neighbor(NamedTuple):
    role: str
    target: int
    offset: int | None


@dataclass(eq=False)
class Overlay:
    """A built topology: per-node neighbor targets with role tags.

    targets[v, c] is the node id of v's c-th link; roles[c] names the
    link kind (bucket-i / finger-i / near-i / shortcut-i).  offsets holds
    the clockwise link spans for ring and symphony, None otherwise.
    """

    spec: GeometrySpec
    build_seed: int
    targets: np.ndarray
    offsets: np.ndarray | None
    roles: tuple[str, ...]

    @property
    def n_nodes(self) -> int:
        return self.spec.n_nodes

    @cached_property
    def _target_rows(self):
        if self.n_nodes <= _PYTHON_ROWS_MAX_NODES:
            return self.targets.tolist()
        return self.targets

    @cached_property
    def _offset_rows(self):
        if self.offsets is None:
            return None
        if self.n_nodes <= _PYTHON_ROWS_MAX_NODES:
            return self.offsets.tolist()
        return self.offsets

    def neighbors(self, node: int) -> list[Neighbor]:
        """Role-tagged links of one node."""
        row = self.targets[node]
        offs = self.offsets[node] if self.offsets is not None else None
        return [
            Neighbor(role, int(row[c]), int(offs[c]) if offs is not None else None)
            for c, role in enumerate(self.roles)
        ]


def build_overlay(spec: GeometrySpec, build_seed: int) -> Overlay:
    """Construct the full adjacency for one overlay instance.

    Rejects d > 20 (simulator scale).  All randomized choices come from
    build_seed, drawn column by column in a fixed order.
    """
    d = spec.d
    if d > SIM_MAX_D:
        raise ValueError(f"simulator supports d <= {SIM_MAX_D}, got d={d}")
    if build_seed < 0:
        raise ValueError("build_seed must be a non-negative integer")
    n = 1 << d
    ids = np.arange(n, dtype=np.int64)
    rng = np.random.default_rng(np.random.SeedSequence(build_seed))
    kind = spec.kind

    if kind in (Geometry.TREE, Geometry.HYPERCUBE):
        # Bucket-i neighbor flips bit i (bit 1 = most significant) and
        # keeps every other bit, so tree hops correct exactly one bit.
        cols = [(ids ^ (1 << (d - i))).astype(np.int32) for i in range(1, d + 1)]
        targets = np.column_stack(cols)
        roles = tuple(f"bucket-{i}" for i in range(1, d + 1))
        return Overlay(spec, build_seed, targets, None, roles)

    if kind is Geometry.XOR:
        # Bucket-i neighbor keeps bits 1..i-1, flips bit i, and draws the
        # remaining d-i bits uniformly at random.
        cols = []
        for i in range(1, d + 1):
            bit = 1 << (d - i)
            high_mask = (n - 1) ^ (2 * bit - 1)
            base = (ids & high_mask) | ((ids & bit) ^ bit)
            suffix = rng.integers(0, bit, size=n, dtype=np.int64) if bit > 1 else 0
            cols.append((base | suffix).astype(np.int32))
        targets = np.column_stack(cols)
        roles = tuple(f"bucket-{i}" for i in range(1, d + 1))
        return Overlay(spec, build_seed, targets, None, roles)

    if kind is Geometry.RING:
        # Finger i spans a clockwise offset drawn uniformly from
        # [2^(i-1), 2^i); finger 1 is always the immediate successor.
        offset_cols = []
        target_cols = []
        for i in range(1, d + 1):
            low = 1 << (i - 1)
            off = rng.integers(low, 2 * low, size=n, dtype=np.int64)
            offset_cols.append(off.astype(np.int32))
            target_cols.append(((ids + off) & (n - 1)).astype(np.int32))
        targets = np.column_stack(target_cols)
        offsets = np.column_stack(offset_cols)
        roles = tuple(f"finger-{i}" for i in range(1, d + 1))
        return Overlay(spec, build_seed, targets, offsets, roles)

    if kind is Geometry.SYMPHONY:
        # k_n immediate clockwise successors plus k_s shortcuts whose
        # length floor(N^u), u ~ U[0,1), follows the harmonic law.
        offset_cols = [np.full(n, j, dtype=np.int32) for j in range(1, spec.k_n + 1)]
        for _ in range(spec.k_s):
            u = rng.random(n)
            length = np.clip(np.floor(n**u).astype(np.int64), 1, n - 1)
            offset_cols.append(length.astype(np.int32))
        target_cols = [((ids + off) & (n - 1)).astype(np.int32) for off in offset_cols]
        targets = np.column_stack(target_cols)
        offsets = np.column_stack(offset_cols)
        roles = tuple(f"near-{j}" for j in range(1, spec.k_n + 1)) + tuple(
            f"shortcut-{j}" for j in range(1, spec.k_s + 1)
        )
        return Overlay(spec, build_seed, targets, offsets, roles)

    raise ValueError(f"unknown geometry kind: {kind}")


@dataclass(eq=False)
class FailurePattern:
    """Aliveness mask: each node failed independently with probability q."""

    alive: np.ndarray
    q: float
    fail_seed: int

    @property
    def n_nodes(self) -> int:
        return int(self.alive.shape[0])

    @property
    def n_alive(self) -> int:
        return int(np.count_nonzero(self.alive))

    @cached_property
    def _alive_seq(self):
        if self.n_nodes <= _PYTHON_ROWS_MAX_NODES:
            return self.alive.tolist()
        return self.alive


def draw_failure_pattern(n_nodes: int, q: float, fail_seed: int) -> FailurePattern:
    """Reproducible aliveness mask over n_nodes from (q, fail_seed)."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"failure probability q must be in [0, 1), got {q}")
    rng = np.random.default_rng(np.random.SeedSequence(fail_seed))
    alive = rng.random(n_nodes) >= q
    return FailurePattern(alive=alive, q=q, fail_seed=fail_seed)


@dataclass(frozen=True)
class RouteResult:
    """Outcome of one greedy route: delivered with a hop count, or failed
    with a reason (dead_end or hop_cap)."""

    delivered: bool
    hops: int
    reason: str | None

    def __bool__(self) -> bool:
        return self.delivered


def _route_tree(rows, alive, src, dst, d, hop_cap):
    cur = src
    hops = 0
    while cur != dst:
        if hops >= hop_cap:
            return False, hops, FAILED_HOP_CAP
        col = d - (cur ^ dst).bit_length()
        nxt = rows[cur][col]
        if not alive[nxt]:
            return False, hops, FAILED_DEAD_END
        cur = int(nxt)
        hops += 1
    return True, hops, None


def _route_hypercube(rows, alive, src, dst, d, hop_cap):
    cur = src
    hops = 0
    while cur != dst:
        if hops >= hop_cap:
            return False, hops, FAILED_HOP_CAP
        diff = cur ^ dst
        row = rows[cur]
        nxt = -1
        for col in range(d):
            if diff & (1 << (d - 1 - col)):
                t = row[col]
                if alive[t]:
                    nxt = int(t)
                    break
        if nxt < 0:
            return False, hops, FAILED_DEAD_END
        cur = nxt
        hops += 1
    return True, hops, None


def _route_xor(rows, alive, src, dst, hop_cap):
    cur = src
    hops = 0
    while cur != dst:
        if hops >= hop_cap:
            return False, hops, FAILED_HOP_CAP
        best = cur ^ dst
        nxt = -1
        for t in rows[cur]:
            if alive[t]:
                dist = t ^ dst
                if dist < best:
                    best = dist
                    nxt = t
        if nxt < 0:
            return False, hops, FAILED_DEAD_END
        cur = int(nxt)
        hops += 1
    return True, hops, None


def _route_ring(rows, offs, alive, src, dst, n, n_cols, hop_cap):
    cur = src
    hops = 0
    while cur != dst:
        if hops >= hop_cap:
            return False, hops, FAILED_HOP_CAP
        delta = (dst - cur) % n
        row_t = rows[cur]
        row_o = offs[cur]
        nxt = -1
        # Offsets grow with the finger index, so the first alive
        # non-overshooting finger from the top is the greedy choice.
        for col in range(n_cols - 1, -1, -1):
            if row_o[col] <= delta:
                t = row_t[col]
                if alive[t]:
                    nxt = int(t)
                    break
        if nxt < 0:
            return False, hops, FAILED_DEAD_END
        cur = nxt
        hops += 1
    return True, hops, None


def _route_symphony(rows, offs, alive, src, dst, n, n_cols, hop_cap):
    cur = src
    hops = 0
    while cur != dst:
        if hops >= hop_cap:
            return False, hops, FAILED_HOP_CAP
        delta = (dst - cur) % n
        row_t = rows[cur]
        row_o = offs[cur]
        best = 0
        nxt = -1
        for col in range(n_cols):
            o = row_o[col]
            if best < o <= delta:
                t = row_t[col]
                if alive[t]:
                    best = o
                    nxt = int(t)
        if nxt < 0:
            return False, hops, FAILED_DEAD_END
        cur = nxt
        hops += 1
    return True, hops, None


def _route_raw(overlay: Overlay, alive, src: int, dst: int):
    kind = overlay.spec.kind
    d = overlay.spec.d
    n = overlay.n_nodes
    hop_cap = HOP_CAP_FACTOR * n
    rows = overlay._target_rows
    if kind is Geometry.TREE:
        return _route_tree(rows, alive, src, dst, d, hop_cap)
    if kind is Geometry.HYPERCUBE:
        return _route_hypercube(rows, alive, src, dst, d, hop_cap)
    if kind is Geometry.XOR:
        return _route_xor(rows, alive, src, dst, hop_cap)
    offs = overlay._offset_rows
    n_cols = len(overlay.roles)
    if kind is Geometry.RING:
        return _route_ring(rows, offs, alive, src, dst, n, n_cols, hop_cap)
    return _route_symphony(rows, offs, alive, src, dst, n, n_cols, hop_cap)


def route(overlay: Overlay, pattern: FailurePattern, src: int, dst: int) -> RouteResult:
    """Greedy no-back-tracking route from src to dst over alive neighbors.

    src and dst are not required to be alive here (a dead dst simply
    makes the route fail); the routability estimator samples both ends
    from the survivors.
    """
    n = overlay.n_nodes
    if not (0 <= src < n and 0 <= dst < n):
        raise ValueError(f"node ids must be in [0, {n}), got src={src}, dst={dst}")
    if src == dst:
        raise ValueError("src and dst must differ")
    if pattern.n_nodes != n:
        raise ValueError("failure pattern size does not match the overlay")
    delivered, hops, reason = _route_raw(overlay, pattern._alive_seq, src, dst)
    return RouteResult(delivered=delivered, hops=hops, reason=reason)


@dataclass(frozen=True)
class SimOutcome:
    """Monte Carlo routability estimate with its sampling pedigree."""

    spec: GeometrySpec
    q: float
    trials: int
    pairs_per_trial: int
    routable_fraction: float
    std_error: float
    hop_cap_hits: int
    seeds: SimSeeds
    trial_fractions: tuple[float, ...]
    redrawn_patterns: int


def _child_seed(root: int, *key: int) -> int:
    return int(
        np.random.SeedSequence([root, *key]).generate_state(1, np.uint64)[0]
    )


def estimate_routability(
    spec: GeometrySpec,
    q: float,
    trials: int,
    pairs_per_trial: int,
    seeds: SimSeeds,
    builder: Callable[[GeometrySpec, int], Overlay] = build_overlay,
) -> SimOutcome:
    """Fraction of alive ordered pairs the geometry can still route.

    Each trial builds a fresh overlay from its own build-seed stream,
    draws a fresh failure pattern (redrawn, and counted, if fewer than
    two nodes survive), samples pairs_per_trial ordered (src, dst) pairs
    uniformly among survivors, and routes each pair.  The estimate is the
    mean of per-trial delivered fractions; std_error is their sample
    standard deviation divided by sqrt(trials).
    """
    if trials < 1 or pairs_per_trial < 1:
        raise ValueError("trials and pairs_per_trial must be >= 1")
    fractions = []
    hop_cap_hits = 0
    redrawn = 0
    for trial in range(trials):
        overlay = builder(spec, _child_seed(seeds.build, trial))
        attempt = 0
        while True:
            pattern = draw_failure_pattern(
                spec.n_nodes, q, _child_seed(seeds.fail, trial, attempt)
            )
            survivors = np.flatnonzero(pattern.alive)
            if survivors.size >= 2:
                break
            attempt += 1
            redrawn += 1
        pair_rng = np.random.default_rng(
            np.random.SeedSequence([seeds.pair, trial])
        )
        n_alive = survivors.size
        src_idx = pair_rng.integers(0, n_alive, size=pairs_per_trial)
        dst_idx = pair_rng.integers(0, n_alive, size=pairs_per_trial)
        collision = src_idx == dst_idx
        while collision.any():
            dst_idx[collision] = pair_rng.integers(0, n_alive, size=int(collision.sum()))
            collision = src_idx == dst_idx
        src_nodes = survivors[src_idx].tolist()
        dst_nodes = survivors[dst_idx].tolist()

        alive_seq = pattern._alive_seq
        delivered = 0
        for src, dst in zip(src_nodes, dst_nodes):
            ok, _, reason = _route_raw(overlay, alive_seq, src, dst)
            if ok:
                delivered += 1
            elif reason == FAILED_HOP_CAP:
                hop_cap_hits += 1
        fractions.append(delivered / pairs_per_trial)

    mean = math.fsum(fractions) / trials
    if trials > 1:
        variance = math.fsum((f - mean) ** 2 for f in fractions) / (trials - 1)
        std_error = math.sqrt(variance / trials)
    else:
        std_error = 0.0
    return SimOutcome(
        spec=spec,
        q=q,
        trials=trials,
        pairs_per_trial=pairs_per_trial,
        routable_fraction=mean,
        std_error=std_error,
        hop_cap_hits=hop_cap_hits,
        seeds=seeds,
        trial_fractions=tuple(fractions),
        redrawn_patterns=redrawn,
    )
