"""Analytic routability of greedy DHT routing under random node failure.

Every geometry shares the same product form for the probability of
successfully routing h hops (or phases) from an alive root when each node
has failed independently with probability q:

    p(h, q) = prod_{m=1..h} (1 - Q(m))

where Q(m) is the probability that routing dies during the phase with m
bits (or one of m distance scales) still to resolve:

    tree       Q(m) = q                     (single usable neighbor)
    hypercube  Q(m) = q^m                   (m usable neighbors)
    xor        Q(m) = q^m * (1 + E(m)),     E(1) = 0,
               E(m) = (1 - q^(m-1)) * (1 + E(m-1))
               -- the exact finite sum q^m + sum_k q^m prod_{j=m-k..m-1}(1-q^j)
    ring       Q(m) = q^m * (1 - w^(2^(m-1))) / (1 - w),  w = q*(1 - q^(m-1))
    symphony   Q    = q^(k_n+k_s) * sum_{j=0..J} x^j, constant in m, with
               x = 1 - k_s/d - q^(k_n+k_s) and J = ceil(d / (1-q))

The expected reachable-set size from an alive root is

    E[S] = sum_{h=1..d} n(h) * p(h, q)

and routability divides E[S] by one of two survivor-count conventions
(see DenominatorMode).  For d > 20 all sums run on normalized weights
n(h)/2^d and products accumulate in the log domain, which keeps d = 100
evaluations stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .geometry import (
    EXACT_PROFILE_MAX_D,
    Geometry,
    GeometrySpec,
    distance_profile,
)

# Products switch to log-domain accumulation past this horizon or when
# any surviving factor drops below this threshold.
_DIRECT_PRODUCT_MAX_H = 64
_DIRECT_PRODUCT_MIN_FACTOR = 1e-12


class DenominatorMode(str, Enum):
    """Survivor-pair normalization used by routability.

    PN_MINUS_ONE divides E[S] by (1-q)*N - 1, the mean survivor count
    minus one.  At small N this undercounts the exact expected number of
    surviving targets and can push the ratio above 1 (clamped, flagged).
    EXACT_SURVIVORS divides by (N-1)*(1-q), the exact expected number of
    surviving non-root nodes.
    """

    PN_MINUS_ONE = "paper"
    EXACT_SURVIVORS = "exact"

    def __str__(self) -> str:
        return self.value


def _validate_q(q: float) -> None:
    if not 0.0 <= q < 1.0:
        raise ValueError(f"failure probability q must be in [0, 1), got {q}")


def suboptimal_hop_cap(d: int, q: float) -> int:
    """ceil(d / (1-q)), the cap on wasted hops per symphony phase.

    Evaluated in exact rational arithmetic on q's shortest decimal form,
    so grid values behave like hand arithmetic (12/(1-0.4) is exactly 20)
    instead of inheriting binary round-off from the float.
    """
    return math.ceil(Fraction(d) / (1 - Fraction(repr(float(q)))))


def tree_phase_failure(q: float, m: int) -> float:
    return q


def hypercube_phase_failure(q: float, m: int) -> float:
    return q**m


def xor_phase_failure(q: float, m: int) -> float:
    """Exact per-phase failure for XOR routing with m unresolved bits.

    Recurrence form of q^m + sum_{k=1..m-1} q^m prod_{j=m-k..m-1}(1-q^j):
    each k-term is one more wasted lower-bit correction before all
    remaining useful neighbors are found dead.
    """
    extra = 0.0
    q_pow = 1.0  # q^(k-1) while entering iteration k
    for k in range(2, m + 1):
        q_pow *= q
        extra = (1.0 - q_pow) * (1.0 + extra)
    return q**m * (1.0 + extra)


def xor_phase_failure_approx(q: float, m: int) -> float:
    """Closed-form approximation of the XOR per-phase failure.

    Uses 1 - x ~ exp(-x) on the inner products; kept only for comparison
    against the exact finite sum.
    """
    if q == 0.0:
        return 0.0
    return q**m * (
        m + q / (1.0 - q) * (q ** (m - 1) * (m - 1) - (1.0 - q ** (m + 1)) / (1.0 - q))
    )


def _pow_of_power_of_two(base: float, log2_exponent: int) -> float:
    """base ** (2 ** log2_exponent) for 0 < base < 1, underflowing to 0."""
    if log2_exponent <= 60:
        return base ** (1 << log2_exponent)
    if log2_exponent <= 1023:
        return math.exp(math.ldexp(1.0, log2_exponent) * math.log(base))
    # 2^1024 * log(base) is below exp underflow for any float base < 1.
    return 0.0


def ring_phase_failure(q: float, m: int) -> float:
    """Per-phase failure for ring routing with m distance scales left.

    q^m * sum_{k=0..2^(m-1)-1} w^k with w = q*(1 - q^(m-1)): the walk may
    waste up to 2^(m-1) progress-free hops, dying with q^m at each stop.
    The huge inner exponent is evaluated as exp(2^(m-1) * ln w), with
    underflow to zero accepted.
    """
    if m == 1:
        return q
    q_m = q**m
    if q_m == 0.0:
        return 0.0
    w = q * (1.0 - q ** (m - 1))
    if w == 0.0:
        return q_m
    tail = _pow_of_power_of_two(w, m - 1)
    return q_m * (1.0 - tail) / (1.0 - w)


def symphony_phase_failure(q: float, d: int, k_n: int, k_s: int) -> float:
    """Per-phase failure for symphony routing; constant across phases.

    q^(k_n+k_s) * sum_{j=0..J} x^j where x = 1 - k_s/d - q^(k_n+k_s) is
    the progress-free hop probability and J = ceil(d/(1-q)) caps how many
    such hops a phase may absorb.  Evaluated as the exact finite
    geometric sum.
    """
    if q == 0.0:
        return 0.0
    dead_all = q ** (k_n + k_s)
    advance = k_s / d
    wander = 1.0 - advance - dead_all
    cap = suboptimal_hop_cap(d, q)
    if wander == 1.0:
        series = float(cap + 1)
    else:
        series = (1.0 - wander ** (cap + 1)) / (1.0 - wander)
    return dead_all * series


def symphony_phase_failure_approx(q: float, d: int, k_n: int, k_s: int) -> float:
    """Geometric closed form of the symphony per-phase failure.

    Replaces the capped sum with exponent d/(1-q) + 1; kept only for
    comparison against the exact finite sum.
    """
    if q == 0.0:
        return 0.0
    dead_all = q ** (k_n + k_s)
    wander = 1.0 - k_s / d - dead_all
    exponent = d / (1.0 - q) + 1.0
    if wander <= 0.0:
        return dead_all / (1.0 - wander)
    return dead_all * (1.0 - wander**exponent) / (1.0 - wander)


def hazard_series(spec: GeometrySpec, q: float, m_max: int) -> np.ndarray:
    """Q(1..m_max) for the geometry, as a float array.

    m_max may exceed spec.d: the per-phase formulas extend naturally to
    arbitrary horizons, with symphony holding d fixed inside Q.
    """
    _validate_q(q)
    if m_max < 1:
        raise ValueError(f"horizon must be >= 1, got {m_max}")
    kind = spec.kind
    if kind is Geometry.TREE:
        return np.full(m_max, q, dtype=float)
    if kind is Geometry.HYPERCUBE:
        with np.errstate(under="ignore"):
            return q ** np.arange(1, m_max + 1, dtype=float)
    if kind is Geometry.SYMPHONY:
        const = symphony_phase_failure(q, spec.d, spec.k_n, spec.k_s)
        return np.full(m_max, const, dtype=float)
    out = np.empty(m_max, dtype=float)
    out[0] = q
    if kind is Geometry.XOR:
        extra = 0.0
        q_prev = 1.0  # q^(m-1)
        q_m = q
        for m in range(2, m_max + 1):
            q_prev *= q
            q_m *= q
            extra = (1.0 - q_prev) * (1.0 + extra)
            out[m - 1] = q_m * (1.0 + extra)
        return out
    if kind is Geometry.RING:
        q_prev = 1.0
        q_m = q
        for m in range(2, m_max + 1):
            q_prev *= q
            q_m *= q
            if q_m == 0.0:
                out[m - 1 :] = 0.0
                break
            w = q * (1.0 - q_prev)
            if w == 0.0:
                out[m - 1] = q_m
                continue
            tail = _pow_of_power_of_two(w, m - 1)
            out[m - 1] = q_m * (1.0 - tail) / (1.0 - w)
        return out
    raise ValueError(f"unknown geometry kind: {kind}")


@dataclass(frozen=True)
class PhaseFailureModel:
    """A geometry with a failure probability q, exposing Q(m)."""

    spec: GeometrySpec
    q: float

    def __post_init__(self) -> None:
        _validate_q(self.q)

    def failure_probability(self, m: int) -> float:
        """Q(m); valid for 1 <= m <= spec.d."""
        if not 1 <= m <= self.spec.d:
            raise ValueError(f"phase index must be in [1, {self.spec.d}], got {m}")
        kind = self.spec.kind
        if kind is Geometry.TREE:
            return tree_phase_failure(self.q, m)
        if kind is Geometry.HYPERCUBE:
            return hypercube_phase_failure(self.q, m)
        if kind is Geometry.XOR:
            return xor_phase_failure(self.q, m)
        if kind is Geometry.RING:
            return ring_phase_failure(self.q, m)
        return symphony_phase_failure(self.q, self.spec.d, self.spec.k_n, self.spec.k_s)


def phase_failure(model: PhaseFailureModel, m: int) -> float:
    """Q(m) for the model's geometry; rejects m outside [1, d]."""
    return model.failure_probability(m)


def success_series(spec: GeometrySpec, q: float, h_max: int) -> np.ndarray:
    """p(1..h_max): cumulative products of (1 - Q(m)).

    Accumulates in the log domain when the horizon exceeds 64 phases or
    any surviving factor drops below 1e-12.
    """
    hazards = hazard_series(spec, q, h_max)
    factors = 1.0 - hazards
    if h_max > _DIRECT_PRODUCT_MAX_H or factors.min() < _DIRECT_PRODUCT_MIN_FACTOR:
        with np.errstate(under="ignore"):
            return np.exp(np.cumsum(np.log1p(-hazards)))
    return np.cumprod(factors)


def path_success(model: PhaseFailureModel, h: int) -> float:
    """p(h, q) = prod_{m=1..h} (1 - Q(m)).

    h may exceed spec.d for asymptotic probes; symphony holds d fixed
    inside its constant Q.
    """
    if h < 1:
        raise ValueError(f"path length must be >= 1, got {h}")
    return float(success_series(model.spec, model.q, h)[-1])


def expected_reach(spec: GeometrySpec, q: float) -> float:
    """E[S] = sum_h n(h) * p(h, q), the mean reachable-set size.

    Returns the exact expectation for d <= 20 and the 2^d-normalized
    value for larger d (matching the profile's normalization).
    """
    _validate_q(q)
    profile = distance_profile(spec)
    p = success_series(spec, q, spec.d)
    return math.fsum(n * s for n, s in zip(profile.values, p))


@dataclass(frozen=True)
class RoutabilityResult:
    """Routability r(N, q) with its inputs and normalization convention.

    expected_reach is E[S], divided by 2^d when reach_normalized is set
    (d > 20).  clamped records that the raw ratio fell outside [0, 1].
    """

    spec: GeometrySpec
    q: float
    routability: float
    failed_fraction: float
    expected_reach: float
    denominator_mode: DenominatorMode
    clamped: bool
    reach_normalized: bool


def routability(
    spec: GeometrySpec,
    q: float,
    mode: DenominatorMode = DenominatorMode.PN_MINUS_ONE,
) -> RoutabilityResult:
    """Routability r = E[S] / survivor-pair denominator, clamped to [0, 1].

    PN_MINUS_ONE divides by (1-q)*2^d - 1 and raises when that quantity
    is not positive; EXACT_SURVIVORS divides by (2^d - 1)*(1-q).  For
    d > 20 the ratio is formed from normalized quantities.
    """
    _validate_q(q)
    mode = DenominatorMode(mode)
    reach = expected_reach(spec, q)
    normalized = spec.d > EXACT_PROFILE_MAX_D
    p_alive = 1.0 - q
    if normalized:
        inv_n = math.ldexp(1.0, -spec.d)
        pn_denominator = p_alive - inv_n
        exact_denominator = (1.0 - inv_n) * p_alive
    else:
        n = 1 << spec.d
        pn_denominator = p_alive * n - 1.0
        exact_denominator = (n - 1) * p_alive
    if mode is DenominatorMode.PN_MINUS_ONE and pn_denominator <= 0.0:
        raise ValueError(
            f"degenerate denominator: (1-q)*2^d <= 1 at d={spec.d}, q={q}; "
            "fewer than one expected survivor besides the root"
        )
    denominator = (
        pn_denominator if mode is DenominatorMode.PN_MINUS_ONE else exact_denominator
    )
    r = reach / denominator
    clamped = False
    if r > 1.0:
        r, clamped = 1.0, True
    elif r < 0.0:
        r, clamped = 0.0, True
    return RoutabilityResult(
        spec=spec,
        q=q,
        routability=r,
        failed_fraction=1.0 - r,
        expected_reach=reach,
        denominator_mode=mode,
        clamped=clamped,
        reach_normalized=normalized,
    )


def tree_closed_form(d: int, q: float) -> float:
    """Tree routability ((2-q)^d - 1) / ((1-q)*2^d - 1), clamped to <= 1.

    Binomial identity: sum_h C(d,h) (1-q)^h = (2-q)^d - 1.  Evaluated in
    log space for d > 64 so that d = 100 stays finite.
    """
    if d < 1:
        raise ValueError(f"identifier length d must be >= 1, got {d}")
    _validate_q(q)
    if d <= _DIRECT_PRODUCT_MAX_H:
        denominator = (1.0 - q) * (1 << d) - 1.0
        if denominator <= 0.0:
            raise ValueError(
                f"degenerate denominator: (1-q)*2^d <= 1 at d={d}, q={q}"
            )
        r = ((2.0 - q) ** d - 1.0) / denominator
    else:
        log_pn = d * math.log(2.0) + math.log1p(-q)
        if log_pn <= 0.0:
            raise ValueError(
                f"degenerate denominator: (1-q)*2^d <= 1 at d={d}, q={q}"
            )
        log_num_pow = d * math.log(2.0 - q)
        log_numerator = log_num_pow + math.log1p(-math.exp(-log_num_pow))
        log_denominator = log_pn + math.log1p(-math.exp(-log_pn))
        r = math.exp(log_numerator - log_denominator)
    return min(r, 1.0)
