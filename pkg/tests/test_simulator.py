import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dhtroutability.analytic import routability
from dhtroutability.geometry import ALL_GEOMETRIES, Geometry, GeometrySpec
from dhtroutability.simulator import (
    FailurePattern,
    Overlay,
    SimSeeds,
    build_overlay,
    draw_failure_pattern,
    estimate_routability,
    route,
)

SEEDS = SimSeeds(build=11, fail=22, pair=33)


def _msb_index(d, value):
    """Bit position 1..d (1 = most significant) of value's leading one."""
    return d - value.bit_length() + 1


# --- overlay structure ---------------------------------------------------------


def test_hypercube_d3_neighbors_of_011():
    overlay = build_overlay(GeometrySpec(Geometry.HYPERCUBE, 3), 0)
    targets = {n.target for n in overlay.neighbors(0b011)}
    assert targets == {0b111, 0b001, 0b010}


def test_ring_first_finger_is_successor():
    for seed in (0, 7, 123456):
        overlay = build_overlay(GeometrySpec(Geometry.RING, 3), seed)
        assert overlay.neighbors(0)[0] == ("finger-1", 1, 1)


@pytest.mark.parametrize("kind", [Geometry.TREE, Geometry.XOR])
def test_prefix_bucket_structure(kind):
    d = 8
    overlay = build_overlay(GeometrySpec(kind, d), 99)
    for v in range(1 << d):
        for i in range(1, d + 1):
            t = int(overlay.targets[v, i - 1])
            diff = v ^ t
            assert _msb_index(d, diff) == i  # shares bits 1..i-1, differs at i
            if kind is Geometry.TREE:
                assert diff == 1 << (d - i)  # tree keeps the suffix too


def test_hypercube_structure_full_scan():
    d = 8
    overlay = build_overlay(GeometrySpec(Geometry.HYPERCUBE, d), 5)
    for v in range(1 << d):
        row = overlay.targets[v]
        assert len(set(int(t) for t in row)) == d
        for t in row:
            assert (v ^ int(t)).bit_count() == 1


def test_ring_finger_offsets_in_range():
    d = 8
    overlay = build_overlay(GeometrySpec(Geometry.RING, d), 17)
    n = 1 << d
    for v in range(n):
        for i in range(1, d + 1):
            off = int(overlay.offsets[v, i - 1])
            assert (1 << (i - 1)) <= off < (1 << i)
            assert int(overlay.targets[v, i - 1]) == (v + off) % n


def test_symphony_structure():
    d = 8
    spec = GeometrySpec(Geometry.SYMPHONY, d, k_n=2, k_s=3)
    overlay = build_overlay(spec, 21)
    n = 1 << d
    assert overlay.roles == ("near-1", "near-2", "shortcut-1", "shortcut-2", "shortcut-3")
    for v in range(n):
        offs = [int(o) for o in overlay.offsets[v]]
        assert offs[:2] == [1, 2]
        for off in offs[2:]:
            assert 1 <= off <= n - 1
        for c, off in enumerate(offs):
            assert int(overlay.targets[v, c]) == (v + off) % n


def test_symphony_shortcut_lengths_harmonic():
    # floor(N^u) lengths: log2 of the draws should be near-uniform over
    # [0, d); check coarse decade occupancy rather than a sharp fit.
    spec = GeometrySpec(Geometry.SYMPHONY, 12)
    overlay = build_overlay(spec, 3)
    lengths = overlay.offsets[:, 1].astype(np.int64)
    logs = np.log2(lengths)
    counts, _ = np.histogram(logs, bins=4, range=(0, 12))
    fractions = counts / lengths.size
    assert np.all(fractions > 0.15)
    assert np.all(fractions < 0.35)


def test_build_determinism_and_seed_sensitivity():
    spec = GeometrySpec(Geometry.XOR, 8)
    a = build_overlay(spec, 42)
    b = build_overlay(spec, 42)
    c = build_overlay(spec, 43)
    assert np.array_equal(a.targets, b.targets)
    assert not np.array_equal(a.targets, c.targets)


def test_build_rejects_large_d():
    with pytest.raises(ValueError, match="d <= 20"):
        build_overlay(GeometrySpec(Geometry.TREE, 21), 0)


# --- failure patterns ----------------------------------------------------------


def test_failure_pattern_reproducible():
    a = draw_failure_pattern(1 << 10, 0.3, 77)
    b = draw_failure_pattern(1 << 10, 0.3, 77)
    assert np.array_equal(a.alive, b.alive)
    assert 0 < a.n_alive < 1 << 10


def test_failure_pattern_no_failures():
    pattern = draw_failure_pattern(256, 0.0, 1)
    assert pattern.n_alive == 256


# --- routing -------------------------------------------------------------------


def _all_alive(n):
    return FailurePattern(alive=np.ones(n, dtype=bool), q=0.0, fail_seed=0)


def test_route_validates_endpoints():
    overlay = build_overlay(GeometrySpec(Geometry.TREE, 4), 0)
    pattern = _all_alive(16)
    with pytest.raises(ValueError):
        route(overlay, pattern, 3, 3)
    with pytest.raises(ValueError):
        route(overlay, pattern, -1, 3)
    with pytest.raises(ValueError):
        route(overlay, pattern, 0, 16)


def test_xor_route_detours_around_failed_neighbor():
    # d=3 overlay with hand-built buckets: 010 -> 101 with 010's bucket-1
    # neighbor 111 dead must detour 010 -> 000 -> 110 -> 100 -> 101.
    spec = GeometrySpec(Geometry.XOR, 3)
    targets = np.zeros((8, 3), dtype=np.int32)
    for v in range(8):  # deterministic suffix-free defaults
        targets[v] = [v ^ 0b100, v ^ 0b010, v ^ 0b001]
    targets[0b010] = [0b111, 0b000, 0b011]
    targets[0b000] = [0b110, 0b010, 0b001]
    targets[0b110] = [0b010, 0b100, 0b111]
    targets[0b100] = [0b011, 0b110, 0b101]
    overlay = Overlay(
        spec=spec,
        build_seed=0,
        targets=targets,
        offsets=None,
        roles=("bucket-1", "bucket-2", "bucket-3"),
    )
    alive = np.ones(8, dtype=bool)
    alive[0b111] = False
    pattern = FailurePattern(alive=alive, q=0.125, fail_seed=0)
    result = route(overlay, pattern, 0b010, 0b101)
    assert result.delivered
    assert result.hops == 4


def test_tree_route_drops_on_dead_bucket():
    overlay = build_overlay(GeometrySpec(Geometry.TREE, 4), 0)
    alive = np.ones(16, dtype=bool)
    alive[0b1000] = False  # the unique first hop from 0000 toward 1111
    pattern = FailurePattern(alive=alive, q=0.0625, fail_seed=0)
    result = route(overlay, pattern, 0b0000, 0b1111)
    assert not result.delivered
    assert result.reason == "dead_end"
    assert result.hops == 0


@pytest.mark.parametrize("kind", ALL_GEOMETRIES)
def test_no_failures_all_pairs_delivered_d8(kind):
    # Exhaustive all-ordered-pairs deliverability at q = 0.
    d = 8
    n = 1 << d
    overlay = build_overlay(GeometrySpec(kind, d), 9)
    pattern = _all_alive(n)
    hop_bound = d if kind in (Geometry.TREE, Geometry.HYPERCUBE, Geometry.XOR) else n
    for src in range(n):
        for dst in range(n):
            if src == dst:
                continue
            result = route(overlay, pattern, src, dst)
            assert result.delivered, (kind, src, dst, result.reason)
            assert result.hops <= hop_bound


@pytest.mark.parametrize("kind", ALL_GEOMETRIES)
def test_no_failures_sampled_pairs_d20(kind):
    d = 20
    n = 1 << d
    overlay = build_overlay(GeometrySpec(kind, d), 13)
    pattern = _all_alive(n)
    rng = np.random.default_rng(4)
    for _ in range(150):
        src, dst = rng.integers(0, n, size=2)
        if src == dst:
            continue
        assert route(overlay, pattern, int(src), int(dst)).delivered


def test_tree_per_distance_delivery_matches_geometric_decay():
    # Delivered fraction over all pairs at bit distance h tracks (1-q)^h:
    # h-1 intermediate nodes plus the target must all be alive.  Within a
    # pattern the pair outcomes share nodes, so the error bar comes from
    # the spread across independent failure patterns.
    d, q = 8, 0.2
    n = 1 << d
    rounds = 8
    overlay = build_overlay(GeometrySpec(Geometry.TREE, d), 3)
    rates = np.zeros((rounds, d + 1))
    for round_ in range(rounds):
        delivered = np.zeros(d + 1)
        attempted = np.zeros(d + 1)
        pattern = draw_failure_pattern(n, q, 1000 + round_)
        alive = pattern.alive
        for src in range(n):
            if not alive[src]:
                continue
            for dst in range(n):
                if dst == src:
                    continue
                h = (src ^ dst).bit_count()
                attempted[h] += 1
                if route(overlay, pattern, src, dst).delivered:
                    delivered[h] += 1
        rates[round_] = delivered / np.maximum(attempted, 1)
    for h in range(1, d + 1):
        mean = rates[:, h].mean()
        sem = rates[:, h].std(ddof=1) / math.sqrt(rounds)
        expected = (1.0 - q) ** h
        assert abs(mean - expected) <= max(3 * sem, 0.005), (h, mean, expected, sem)


@settings(max_examples=60, deadline=None)
@given(
    kind=st.sampled_from(ALL_GEOMETRIES),
    d=st.integers(min_value=1, max_value=8),
    q=st.sampled_from([0.0, 0.1, 0.3, 0.6, 0.9]),
    build_seed=st.integers(min_value=0, max_value=2**32),
    fail_seed=st.integers(min_value=0, max_value=2**32),
    pair=st.integers(min_value=0, max_value=2**30),
)
def test_route_robustness_property(kind, d, q, build_seed, fail_seed, pair):
    # Any endpoints, any pattern: route terminates with a sound outcome
    # and never trips the defensive hop cap (strict progress).
    n = 1 << d
    overlay = build_overlay(GeometrySpec(kind, d), build_seed)
    pattern = draw_failure_pattern(n, q, fail_seed)
    src = pair % n
    dst = (src + 1 + (pair // n) % (n - 1)) % n if n > 1 else 1 - src
    if src == dst:
        return
    result = route(overlay, pattern, src, dst)
    assert result.reason != "hop_cap"
    assert result.hops <= 4 * n
    if result.delivered:
        assert result.reason is None
        assert result.hops >= 1
        assert bool(pattern.alive[dst])
    else:
        assert result.reason == "dead_end"


# --- estimator -----------------------------------------------------------------


def test_estimate_no_failures_is_exact():
    for kind in ALL_GEOMETRIES:
        outcome = estimate_routability(GeometrySpec(kind, 8), 0.0, 3, 200, SEEDS)
        assert outcome.routable_fraction == 1.0
        assert outcome.std_error == 0.0
        assert outcome.hop_cap_hits == 0


def test_estimate_determinism():
    spec = GeometrySpec(Geometry.RING, 10)
    a = estimate_routability(spec, 0.25, 4, 300, SEEDS)
    b = estimate_routability(spec, 0.25, 4, 300, SEEDS)
    assert a == b
    c = estimate_routability(spec, 0.25, 4, 300, SimSeeds(11, 22, 34))
    assert c.trial_fractions != a.trial_fractions


def test_estimate_records_metadata():
    outcome = estimate_routability(GeometrySpec(Geometry.TREE, 6), 0.1, 5, 50, SEEDS)
    assert outcome.trials == 5
    assert outcome.pairs_per_trial == 50
    assert outcome.seeds == SEEDS
    assert len(outcome.trial_fractions) == 5
    assert 0.0 <= outcome.routable_fraction <= 1.0


def test_estimate_redraws_tiny_patterns():
    # d=1, q=0.9: most masks kill one or both of the two nodes.
    outcome = estimate_routability(GeometrySpec(Geometry.RING, 1), 0.9, 8, 10, SEEDS)
    assert outcome.redrawn_patterns > 0
    assert 0.0 <= outcome.routable_fraction <= 1.0


def test_estimate_validates_budget():
    with pytest.raises(ValueError):
        estimate_routability(GeometrySpec(Geometry.TREE, 4), 0.1, 0, 10, SEEDS)
    with pytest.raises(ValueError):
        estimate_routability(GeometrySpec(Geometry.TREE, 4), 0.1, 1, 0, SEEDS)


def test_estimate_tracks_analytic_hypercube():
    # Cross-module agreement at a modest budget.
    spec = GeometrySpec(Geometry.HYPERCUBE, 10)
    outcome = estimate_routability(spec, 0.2, 6, 800, SEEDS)
    expected = routability(spec, 0.2).routability
    tolerance = max(0.02, 3 * outcome.std_error)
    assert abs(outcome.routable_fraction - expected) <= tolerance


def test_estimate_ring_not_below_analytic():
    # The ring model discards wasted-hop progress, so it lower-bounds the
    # simulated routability.
    spec = GeometrySpec(Geometry.RING, 10)
    outcome = estimate_routability(spec, 0.3, 6, 800, SEEDS)
    expected = routability(spec, 0.3).routability
    assert outcome.routable_fraction >= expected - max(0.02, 3 * outcome.std_error)
