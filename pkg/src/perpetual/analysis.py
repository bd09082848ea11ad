"""Closed-form overhead, complexity and recoding estimates.

Everything here is a pure function of the code parameters. The Monte-Carlo
code in :mod:`perpetual.sim` is checked against these numbers.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .gf import check_field

BETA_TOL = 1e-12
BETA_MAX_TERMS = 10_000_000


@dataclass(frozen=True)
class OverheadBounds:
    alpha: float
    beta: float

    @property
    def upper(self):
        return self.alpha + self.beta


@dataclass(frozen=True)
class OpBounds:
    fly: float
    forward1: float
    forward2: float

    @property
    def total(self):
        return self.fly + 2 * self.forward1 + 2 * self.forward2


@dataclass(frozen=True)
class RecodeDistribution:
    p_passive_total: float
    p_active_by_delta: dict = field(default_factory=dict)
    p_reencode_total: float = 0.0

    @property
    def p_active_total(self):
        return sum(self.p_active_by_delta.values())

    def total(self):
        return self.p_passive_total + self.p_active_total + self.p_reencode_total


def harmonic(n):
    return math.fsum(1.0 / k for k in range(1, n + 1))


def rlnc_overhead_lower(g, q):
    """Expected extra packets for dense random coding: sum of 1/(q^k - 1), k = 1..g."""
    check_field(q)
    # 1/(q^k - 1) = x/(1 - x) with x = q^-k; far terms underflow to zero harmlessly
    terms = []
    for k in range(1, g + 1):
        x = float(q) ** -k
        if x == 0.0:
            break
        terms.append(x / (1.0 - x))
    return math.fsum(reversed(terms))


def _cover_prob(g, w):
    return 1.0 / g + w / (g * harmonic(g))


def coverage_cdf(x, g, w):
    """Probability that x random coded symbols cover all g pivots (lower bound)."""
    if x <= 0:
        return 0.0
    p = _cover_prob(g, w)
    if p >= 1.0:
        return 1.0
    miss = math.exp(x * math.log1p(-p))
    return math.exp(g * math.log1p(-miss)) if miss < 1.0 else 0.0


def _coverage_sf(xs, g, w):
    p = _cover_prob(g, w)
    if p >= 1.0:
        return np.zeros(len(xs))
    miss = np.exp(np.asarray(xs, dtype=float) * math.log1p(-p))
    return -np.expm1(g * np.log1p(-miss))


def overhead_upper(g, w, q):
    """alpha plus the expected number of symbols still uncovered after g packets."""
    if w < 1:
        raise ValueError("the coverage bound needs w >= 1")
    alpha = rlnc_overhead_lower(g, q)
    beta = 0.0
    start = g
    chunk = 4096
    while start < g + BETA_MAX_TERMS:
        sf = _coverage_sf(np.arange(start, start + chunk), g, w)
        small = np.flatnonzero(sf < BETA_TOL)
        if small.size:
            beta += math.fsum(sf[: small[0]])
            break
        beta += math.fsum(sf)
        start += chunk
        chunk *= 2
    return OverheadBounds(alpha, beta)


def encode_ops(w, q):
    """Expected row multiply-adds to produce one source packet."""
    check_field(q)
    return 1 + w * (1 - 1 / q)


def op_bounds(g, w, q):
    if not 1 <= w < g:
        raise ValueError("op bounds need 1 <= w < g")
    check_field(q)
    scale = (q - 1) / (q * g)
    return OpBounds(
        fly=q / (q - 1) * harmonic(g),
        forward1=scale * (g - w) * w,
        forward2=scale * w * (w - 1) / 2,
    )


def p_unseen(eps, mu):
    return 1.0 - (1.0 - eps) ** mu


def p_passive(r, mu, g):
    if r < mu:
        return 0.0
    prod = 1.0
    for i in range(mu):
        prod *= (r - i) / (g - i)
    return prod


def log_comb(n, k):
    if k < 0 or k > n or n < 0:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _hypergeom_sum(r, delta, g, js):
    base = log_comb(g, r)
    terms = (log_comb(delta, j) + log_comb(g - delta, r - j) - base for j in js)
    return math.fsum(math.exp(t) for t in terms if t != -math.inf)


def p_range_short(r, mu, delta, g):
    """Probability that one fixed range of ``delta`` indices holds fewer than mu of r pivots."""
    return _hypergeom_sum(r, delta, g, range(mu))


def p_range_ok(r, mu, delta, g):
    """Complement of :func:`p_range_short`, summed directly so small values keep their precision."""
    return _hypergeom_sum(r, delta, g, range(mu, min(delta, r) + 1))


def p_active(r, mu, delta, g):
    """Chance that at least one of the g ranges of ``delta`` indices holds mu pivots."""
    if mu > delta:
        raise ValueError("delta must be at least mu")
    if r <= 0:
        return 0.0
    ok = p_range_ok(r, mu, delta, g)
    if ok < 0.5:
        return -math.expm1(g * math.log1p(-ok))
    return 1.0 - min(p_range_short(r, mu, delta, g), 1.0) ** g


def recode_delta_distribution(g, mu, delta_max=None):
    """Kind distribution of repair packets at a relay, averaged over rank 1..g.

    At every rank a packet is passive with probability ``p_passive``; the rest
    goes to the smallest feasible delta, using the increase of ``p_active``
    from one delta to the next, and whatever is left is re-encoded.
    """
    delta_max = 2 * mu if delta_max is None else delta_max
    if delta_max < mu:
        raise ValueError("delta_max must be at least mu")
    deltas = range(mu, delta_max + 1)
    passive = 0.0
    active = dict.fromkeys(deltas, 0.0)
    reencode = 0.0
    for r in range(1, g + 1):
        pp = p_passive(r, mu, g)
        rest = 1.0 - pp
        prev = 0.0
        for d in deltas:
            cur = max(prev, p_active(r, mu, d, g))
            active[d] += rest * (cur - prev)
            prev = cur
        passive += pp
        reencode += rest * (1.0 - prev)
    return RecodeDistribution(
        p_passive_total=passive / g,
        p_active_by_delta={d: v / g for d, v in active.items()},
        p_reencode_total=reencode / g,
    )


__all__ = [
    "OpBounds",
    "OverheadBounds",
    "RecodeDistribution",
    "coverage_cdf",
    "encode_ops",
    "harmonic",
    "log_comb",
    "op_bounds",
    "overhead_upper",
    "p_active",
    "p_passive",
    "p_range_ok",
    "p_range_short",
    "p_unseen",
    "recode_delta_distribution",
    "rlnc_overhead_lower",
]
