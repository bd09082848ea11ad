"""Recoding at a relay from a partially filled perpetual decoder.

Three ways to produce a repair packet without decoding first:

* passive: re-send a stored row that already absorbed at least ``mu``
  substitutions while it was decoded on the fly;
* active: mix the stored rows whose pivots fall in a short circular range
  holding at least ``mu`` pivots, which widens the vector by that range;
* re-encoding: once the relay holds the whole generation, encode exactly
  like the source.

:func:`recode_active` is the plain random-window recoder, which mixes the
rows in ``(p, p + w]`` after a random present pivot ``p``.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .codec import CodingVector, Encoder, EncoderMode, Packet


class RecodeKind(enum.Enum):
    PASSIVE = "passive"
    ACTIVE = "active"
    REENCODED = "reencoded"
    # re-encoded packets sent after every scheduled repair slot was used up
    TOPUP = "topup"
    FORWARDED = "forwarded"


@dataclass(frozen=True)
class RecodePolicy:
    mu: int
    delta_max: int = None

    def __post_init__(self):
        if self.delta_max is None:
            object.__setattr__(self, "delta_max", 2 * self.mu)
        if self.mu < 2:
            raise ValueError(f"mu must be at least 2, got {self.mu}")
        if self.delta_max < self.mu:
            raise ValueError(f"delta_max ({self.delta_max}) must be at least mu ({self.mu})")

    def check(self, cfg):
        if self.mu >= cfg.g:
            raise ValueError(f"mu must be below g={cfg.g}")


@dataclass(frozen=True)
class RecodeOutcome:
    packet: Packet
    kind: RecodeKind
    delta: int = 0
    combined: int = 1


def row_packet(dec, row, sym, pivot, cfg):
    """Compact packet for a decoder-space row, or None if it cannot go on the wire."""
    f = dec.rows
    if f.is_zero(row):
        return None
    c = f.coeff(row, pivot)
    if not c:
        return None
    if c != 1:
        row = f.normalize(row, c)
        sym = f.sym_normalize(sym, c)
    dense = f.to_dense(row)
    nz = np.flatnonzero(dense)
    width = int(((nz - pivot) % cfg.g).max())
    if width > cfg.max_width:
        return None
    coeffs = dense[(pivot + 1 + np.arange(width)) % cfg.g]
    return Packet(CodingVector(pivot, coeffs), f.sym_out(sym))


def _mix(dec, indices, coeffs):
    f = dec.rows
    row, sym = f.zero(), f.sym_zero()
    for i, h in zip(indices, coeffs):
        if h:
            row = f.madd(row, dec.G[i], h)
            sym = f.sym_madd(sym, dec.X[i], h)
    return row, sym


def recode_active(dec, cfg, rng):
    """Random present pivot p mixed with the rows in (p, p + w]; None at rank 0."""
    if dec.rank == 0:
        return None
    rng = np.random.default_rng(rng)
    g = cfg.g
    while True:
        p = int(rng.integers(g))
        if dec.pivot_present[p]:
            break
    window = [(p + k) % g for k in range(1, cfg.w + 1)]
    window = [i for i in window if dec.pivot_present[i]]
    coeffs = [1] + rng.integers(0, cfg.q, size=len(window)).tolist()
    row, sym = _mix(dec, [p] + window, coeffs)
    return row_packet(dec, row, sym, p, cfg)


def passive_eligible(dec, i, mu):
    return (
        dec.pivot_present[i]
        and not dec.recode_used[i]
        and dec.subs_count[i] >= mu
        and dec.row_width(i) >= 1
    )


def find_windows(present, mu, delta):
    """Start indices s (present pivots) whose range [s, s + delta] holds at least mu pivots."""
    present = np.asarray(present, dtype=np.int64)
    g = len(present)
    if delta + 1 > g:
        return np.empty(0, dtype=np.int64)
    cs = np.concatenate(([0], np.cumsum(np.concatenate((present, present)))))
    starts = np.arange(g)
    counts = cs[starts + delta + 1] - cs[starts]
    return np.flatnonzero((counts >= mu) & (present == 1))


def smallest_window(present, policy):
    for delta in range(policy.mu, policy.delta_max + 1):
        starts = find_windows(present, policy.mu, delta)
        if starts.size:
            return delta, starts
    return None, None


class Recoder:
    """Repair-packet source bound to one relay decoder.

    ``rng`` drives every random choice; a re-encoder is created lazily once
    the decoder reports the generation decoded.
    """

    def __init__(self, dec, cfg, policy, rng=None):
        policy.check(cfg)
        self.dec = dec
        self.cfg = cfg
        self.policy = policy
        self.rng = np.random.default_rng(rng)
        self._encoder = None

    def passive(self, index=None):
        dec, mu = self.dec, self.policy.mu
        if index is None:
            pool = [i for i in range(self.cfg.g) if passive_eligible(dec, i, mu)]
            if not pool:
                return None
            index = pool[int(self.rng.integers(len(pool)))]
        elif not passive_eligible(dec, index, mu):
            return None
        pkt = row_packet(dec, dec.G[index], dec.X[index], index, self.cfg)
        if pkt is None:
            return None
        dec.recode_used[index] = True
        return RecodeOutcome(pkt, RecodeKind.PASSIVE, 0, 1 + dec.subs_count[index])

    def active(self):
        dec, cfg = self.dec, self.cfg
        if dec.rank < self.policy.mu:
            return None
        delta, starts = smallest_window(dec.pivot_present, self.policy)
        if delta is None:
            return None
        s = int(starts[int(self.rng.integers(starts.size))])
        members = [(s + k) % cfg.g for k in range(delta + 1)]
        members = [i for i in members if dec.pivot_present[i]]
        coeffs = [1] + self.rng.integers(0, cfg.q, size=len(members) - 1).tolist()
        row, sym = _mix(dec, members, coeffs)
        pkt = row_packet(dec, row, sym, s, cfg)
        if pkt is None:
            return None
        return RecodeOutcome(pkt, RecodeKind.ACTIVE, delta, sum(1 for h in coeffs if h))

    def reencode(self):
        if not self.dec.decoded:
            return None
        if self._encoder is None:
            self._encoder = Encoder(self.dec.extract(), self.cfg, EncoderMode.RANDOM, self.rng)
        return RecodeOutcome(self._encoder.encode(), RecodeKind.REENCODED, 0, self.cfg.g)

    def hybrid(self, candidate=None):
        """Best available repair packet, or None when the caller has to wait.

        A decoded relay re-encodes. Otherwise passive beats active; with
        ``candidate`` set only that row is considered for passive use (the
        row just inserted), else any eligible row is drawn uniformly.
        """
        if self.dec.decoded:
            return self.reencode()
        if self.dec.rank == 0:
            return None
        if candidate is None or candidate >= 0:
            out = self.passive(candidate)
            if out is not None:
                return out
        return self.active()


def recode_hybrid(dec, cfg, policy, rng=None, candidate=None):
    return Recoder(dec, cfg, policy, rng).hybrid(candidate)


__all__ = [
    "RecodeKind",
    "RecodeOutcome",
    "RecodePolicy",
    "Recoder",
    "find_windows",
    "passive_eligible",
    "recode_active",
    "recode_hybrid",
    "row_packet",
    "smallest_window",
]
