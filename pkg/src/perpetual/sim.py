"""Seeded Monte-Carlo runs: single-link overhead and op counts, two-hop recoding.

Trial ``i`` of a run with master seed ``s`` draws all of its randomness from
``numpy.random.default_rng(SeedSequence(s, spawn_key=(i,)))``, so trials are
independent of each other and any single one can be replayed with
:func:`trial_rng`.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .codec import CodeConfig, Encoder, EncoderMode, random_generation
from .decoder import Decoder, Outcome
from .recoder import RecodeKind, Recoder
from .rlnc import RlncDecoder, RlncEncoder


def trial_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


class ErasureChannel:
    def __init__(self, eps, rng):
        if not 0.0 <= eps <= 1.0:
            raise ValueError(f"erasure probability must be in [0, 1], got {eps}")
        self.eps = eps
        self.rng = rng

    def passes(self):
        if self.eps == 0.0:
            return True
        return self.rng.random() >= self.eps


@dataclass
class RunStats:
    trials: int
    overheads: list = field(default_factory=list)
    ops_fly: list = field(default_factory=list)
    ops_final: list = field(default_factory=list)
    dependent_count: int = 0
    failures: int = 0
    histogram: Counter = field(default_factory=Counter)

    @property
    def mean_overhead(self):
        return float(np.mean(self.overheads)) if self.overheads else math.nan

    @property
    def stddev(self):
        return float(np.std(self.overheads, ddof=1)) if len(self.overheads) > 1 else 0.0

    @property
    def ops_fly_per_symbol(self):
        return float(np.mean(self.ops_fly)) if self.ops_fly else math.nan

    @property
    def ops_final_per_symbol(self):
        return float(np.mean(self.ops_final)) if self.ops_final else math.nan

    @property
    def ops_total_per_symbol(self):
        return self.ops_fly_per_symbol + self.ops_final_per_symbol

    def kind_distribution(self, exclude=(RecodeKind.FORWARDED, RecodeKind.TOPUP)):
        """Share of relay-emitted packets per (kind, delta) key, leaving out ``exclude`` kinds."""
        hist = {k: v for k, v in self.histogram.items() if k[0] not in exclude}
        total = sum(hist.values())
        return {k: v / total for k, v in sorted(hist.items(), key=_kind_order)} if total else {}


def _kind_order(item):
    kind, delta = item[0]
    order = list(RecodeKind)
    return order.index(kind), delta


def unicast_trial(cfg, mode, rng, max_packets=None):
    """Encode one random generation and decode it; returns the finished decoder."""
    gen = random_generation(cfg, rng)
    enc = Encoder(gen, cfg, mode, rng)
    dec = Decoder(cfg)
    limit = max_packets or 50 * cfg.g + 1000
    while not dec.decoded and dec.received < limit:
        dec.consume(enc.encode())
    ok = dec.decoded and np.array_equal(dec.extract(), gen)
    return dec, ok


def run_unicast(cfg, mode=EncoderMode.RANDOM, trials=100, seed=0):
    if trials < 1:
        raise ValueError("trials must be at least 1")
    mode = EncoderMode(mode)
    stats = RunStats(trials)
    for i in range(trials):
        dec, ok = unicast_trial(cfg, mode, trial_rng(seed, i))
        if not ok:
            stats.failures += 1
            continue
        stats.overheads.append(dec.received - cfg.g)
        stats.ops_fly.append(dec.ops_fly / cfg.g)
        stats.ops_final.append(dec.ops_final / cfg.g)
        stats.dependent_count += dec.discarded
    return stats


def run_rlnc(cfg, trials=100, seed=0):
    if trials < 1:
        raise ValueError("trials must be at least 1")
    stats = RunStats(trials)
    for i in range(trials):
        rng = trial_rng(seed, i)
        gen = random_generation(cfg, rng)
        enc = RlncEncoder(gen, cfg, rng)
        dec = RlncDecoder(cfg)
        while not dec.decoded:
            dec.consume(enc.encode())
        if not np.array_equal(dec.extract(), gen):
            stats.failures += 1
            continue
        stats.overheads.append(dec.received - cfg.g)
        stats.ops_fly.append(dec.ops_fly / cfg.g)
        stats.ops_final.append(dec.ops_final / cfg.g)
        stats.dependent_count += dec.discarded
    return stats


def two_hop_trial(cfg, policy, eps_ar, eps_rb, rng, hist):
    """One A -> R -> B transfer; returns (ok, packets R received, packets sent).

    Each packet R receives is forwarded and earns ``1/(1 - eps_rb) - 1``
    repair slots. A slot is served right away by passive or active
    recoding when the relay state allows it, and deferred otherwise.
    Once R decodes, A stops, the deferred slots go out as re-encoded
    packets, and any packets B still needs after that are top-ups.
    ``hist`` counts every packet R sends, keyed by ``(kind, delta)``.
    """
    g = cfg.g
    gen = random_generation(cfg, rng)
    src = Encoder(gen, cfg, EncoderMode.RANDOM, rng)
    relay = Decoder(cfg)
    sink = Decoder(cfg)
    recoder = Recoder(relay, cfg, policy, rng)
    ar = ErasureChannel(eps_ar, rng)
    rb = ErasureChannel(eps_rb, rng)
    rate = 1.0 / (1.0 - eps_rb) - 1.0 if eps_rb < 1.0 else 0.0
    credit = 0.0
    deferred = 0
    sent = 0
    budget = 50 * g

    def emit(pkt, key):
        nonlocal sent
        sent += 1
        hist[key] += 1
        if rb.passes():
            sink.consume(pkt)

    while not sink.decoded and sent < budget:
        if relay.decoded:
            key = (RecodeKind.REENCODED, 0) if deferred else (RecodeKind.TOPUP, 0)
            deferred = max(deferred - 1, 0)
            emit(recoder.reencode().packet, key)
            continue
        sent += 1
        pkt = src.encode()
        if not ar.passes():
            continue
        res = relay.consume(pkt)
        emit(pkt, (RecodeKind.FORWARDED, 0))
        credit += rate
        while credit >= 1.0:
            credit -= 1.0
            out = None
            if not relay.decoded and relay.rank >= policy.mu:
                candidate = res.index if res.kind is Outcome.INSERTED else -1
                out = recoder.hybrid(candidate)
            if out is None:
                deferred += 1
            else:
                emit(out.packet, (out.kind, out.delta))
    ok = sink.decoded and np.array_equal(sink.extract(), gen)
    return ok, relay.received, sent


def run_two_hop(cfg, policy, eps_ar=0.0, eps_rb=0.0, trials=10, seed=0):
    if trials < 1:
        raise ValueError("trials must be at least 1")
    policy.check(cfg)
    stats = RunStats(trials)
    for i in range(trials):
        hist = Counter()
        ok, _, _ = two_hop_trial(cfg, policy, eps_ar, eps_rb, trial_rng(seed, i), hist)
        if not ok:
            stats.failures += 1
        stats.histogram.update(hist)
    return stats


__all__ = [
    "CodeConfig",
    "ErasureChannel",
    "RunStats",
    "run_rlnc",
    "run_two_hop",
    "run_unicast",
    "trial_rng",
    "two_hop_trial",
    "unicast_trial",
]
