"""Perpetual decoder: on-the-fly forward substitution plus final elimination.

Rows of the decoding matrix are indexed by pivot position. A stored row ``i``
always has a unit coefficient at column ``i`` and its other nonzeros inside
the circular window ``[i, i + w_max]``, where ``w_max`` is the widest packet
seen so far. The final phase only ever touches the last ``w_max`` rows going
down and the ``w_max`` rows above each pivot going up.
"""

import enum
from dataclasses import dataclass

import numpy as np

from ._rows import rows_for
from .codec import MalformedPacketError, band_pivot, circular_width


class DecoderStateError(RuntimeError):
    pass


class Outcome(enum.Enum):
    INSERTED = "inserted"
    DEPENDENT = "dependent"
    DECODED = "decoded"


@dataclass(frozen=True)
class ConsumeOutcome:
    kind: Outcome
    rank: int
    index: int = -1


def check_packet(pkt, cfg):
    v = pkt.vector
    if not 0 <= v.pivot < cfg.g:
        raise MalformedPacketError(f"pivot {v.pivot} out of range for g={cfg.g}")
    if v.width >= cfg.g:
        raise MalformedPacketError(f"width {v.width} must be below g={cfg.g}")
    if v.width and int(v.coeffs.max()) >= cfg.q:
        raise MalformedPacketError(f"coefficient outside GF({cfg.q})")
    if len(pkt.symbol) != cfg.symbol_size:
        raise MalformedPacketError(f"symbol has {len(pkt.symbol)} bytes, expected {cfg.symbol_size}")


class Decoder:
    """Decoder state for one generation.

    Attributes mirror the decoding matrix bookkeeping: ``pivot_present``,
    ``rank``, ``subs_count`` (substitutions absorbed by each stored row,
    used for passive recoding), the row-operation counters ``ops_fly`` and
    ``ops_final``, and ``discarded`` for packets found to be dependent.
    """

    max_final_rounds = 3

    def __init__(self, cfg, iteration_cap=None):
        self.cfg = cfg
        g = cfg.g
        self.g = g
        self.rows = rows_for(cfg.q, g, cfg.symbol_size)
        self.iteration_cap = 3 * g if iteration_cap is None else iteration_cap
        self.G = [None] * g
        self.X = [None] * g
        self.pivot_present = [False] * g
        self.subs_count = [0] * g
        self.recode_used = [False] * g
        self.rank = 0
        self.w_max = 0
        self.ops_fly = 0
        self.ops_final = 0
        self.discarded = 0
        self.received = 0
        self.final_attempts = 0
        self.cycles_broken = 0
        self.reinjected = 0
        self.decoded = False
        # rows discarded by a failed final_forward, replayed through on-the-fly decoding
        self._pending = []

    # on-the-fly phase

    def forward_substitute(self, dense, symbol, pivot=None, width=None):
        """Reduce a dense coding vector against the stored rows and insert it.

        Returns the row index it was stored at, or ``None`` when the vector
        turned out to be dependent (or the iteration cap was hit).
        """
        f = self.rows
        row = f.from_dense(dense)
        if f.is_zero(row):
            self.discarded += 1
            return None
        if pivot is None:
            pivot = band_pivot(dense)
        if width is None:
            width = circular_width(np.asarray(dense), pivot)
        self.w_max = max(self.w_max, width)
        idx = self._forward(row, pivot, bytes(symbol))
        if idx is None:
            self.discarded += 1
        return idx

    def _forward(self, row, start, symbol):
        f = self.rows
        G = self.G
        g = self.g
        trail = []
        seen = None
        dropped = {}
        for step in range(self.iteration_cap):
            if f.is_zero(row):
                break
            c = f.first_nonzero(row, start)
            coef = f.coeff(row, c)
            if G[c] is None:
                self._insert(c, row, coef, symbol, trail, dropped)
                return c
            if step >= g:
                # a long chain may be a periodic orbit through the circular band
                if seen is None:
                    seen = {}
                key = (f.key(row), c)
                t0 = seen.get(key)
                if t0 is not None:
                    r = self._redundant_row(trail[t0:], c)
                    if r is None:
                        break
                    dropped[r] = self.X[r]
                    self._drop(r)
                    self.cycles_broken += 1
                    seen = {}
                    continue
                seen[key] = len(trail)
            row = f.madd(row, G[c], coef)
            trail.append((coef, c))
            self.ops_fly += 1
            # nonzeros now lie in (c, c + w_max]; resume the circular scan here
            start = c
        return None

    @staticmethod
    def _redundant_row(period, current):
        """Row to drop after the reduction returned to an earlier state.

        Over one period the subtracted rows, weighted by their accumulated
        coefficients, sum to zero, so every row with a nonzero accumulated
        coefficient lies in the span of the others.
        """
        acc = {}
        for coef, idx in period:
            acc[idx] = acc.get(idx, 0) ^ coef
        live = [idx for idx, a in acc.items() if a]
        if not live:
            return None
        if current in live:
            return current
        for _, idx in reversed(period):
            if idx in live:
                return idx

    def _insert(self, c, row, coef, symbol, trail, dropped=None):
        # the symbol only sees the row operations once the packet survives
        f = self.rows
        X = self.X
        sym = f.sym_in(symbol)
        for k, idx in trail:
            src = dropped[idx] if dropped and idx in dropped else X[idx]
            sym = f.sym_madd(sym, src, k)
        self.G[c] = f.normalize(row, coef)
        self.X[c] = f.sym_normalize(sym, coef)
        self.pivot_present[c] = True
        self.subs_count[c] = len(trail)
        self.recode_used[c] = False
        self.rank += 1

    # final phase

    def final_forward(self):
        """Bring the full matrix to echelon form, discarding rows that cannot
        hold a pivot. Returns True when the rank is still ``g`` afterwards."""
        if self.rank != self.g:
            raise DecoderStateError("final decoding needs a pivot candidate for every row")
        f = self.rows
        G, X = self.G, self.X
        g = self.g
        bottom = max(g - self.w_max, 0)
        self.final_attempts += 1
        for i in range(g):
            candidates = range(i, g) if i >= bottom else _chain(i, bottom, g)
            for j in candidates:
                c = f.coeff(G[j], i)
                if c:
                    if j != i:
                        G[i], G[j] = G[j], G[i]
                        X[i], X[j] = X[j], X[i]
                        self.subs_count[i], self.subs_count[j] = self.subs_count[j], self.subs_count[i]
                        self.recode_used[i] = self.recode_used[j] = False
                    if c != 1:
                        G[i] = f.normalize(G[i], c)
                        X[i] = f.sym_normalize(X[i], c)
                    pivot_row, pivot_sym = G[i], X[i]
                    for k in range(max(j + 1, bottom), g):
                        ck = f.coeff(G[k], i)
                        if ck:
                            G[k] = f.madd(G[k], pivot_row, ck)
                            X[k] = f.sym_madd(X[k], pivot_sym, ck)
                            self.recode_used[k] = False
                            self.ops_final += 1
                    break
                if j == g - 1:
                    self._pending.append((i, G[i], X[i]))
                    if i != g - 1 and not f.equal(G[i], G[i + 1]):
                        G[i + 1] = f.madd(G[i + 1], G[i], 1)
                        X[i + 1] = f.sym_madd(X[i + 1], X[i], 1)
                        self.subs_count[i + 1] = 0
                        self.recode_used[i + 1] = False
                        self.ops_final += 1
                    self._drop(i)
        return self.rank == g

    def _drop(self, i):
        self.G[i] = None
        self.X[i] = None
        self.pivot_present[i] = False
        self.subs_count[i] = 0
        self.recode_used[i] = False
        self.rank -= 1

    def final_backward(self):
        """Clear the entries above the diagonal; afterwards G is the identity.

        Rows are visited bottom-up. Every row below the current one has
        already been reduced to a unit row, so each nonzero ``G[j][i]`` costs
        exactly one multiply-add of symbol ``i`` into symbol ``j``. This is
        the same set of operations as clearing column by column, and the
        band limits each row to at most ``w_max`` of them.
        """
        f = self.rows
        G, X = self.G, self.X
        for j in range(self.g - 1, -1, -1):
            sym = X[j]
            for i, c in f.entries_after(G[j], j):
                sym = f.sym_madd(sym, X[i], c)
                self.ops_final += 1
            X[j] = sym
            G[j] = f.unit(j)

    # packet interface

    def consume(self, pkt):
        check_packet(pkt, self.cfg)
        self.received += 1
        if self.decoded:
            self.discarded += 1
            return ConsumeOutcome(Outcome.DEPENDENT, self.rank)
        v = pkt.vector
        self.w_max = max(self.w_max, v.width)
        idx = self._forward(self.rows.from_vector(v), v.pivot, pkt.symbol)
        if idx is None:
            self.discarded += 1
            return ConsumeOutcome(Outcome.DEPENDENT, self.rank)
        for _ in range(self.max_final_rounds):
            if self.rank < self.g:
                break
            if self.final_forward():
                self.final_backward()
                self.decoded = True
                return ConsumeOutcome(Outcome.DECODED, self.rank, idx)
            self._replay_discarded()
        self._pending.clear()
        return ConsumeOutcome(Outcome.INSERTED, self.rank, idx)

    def _replay_discarded(self):
        f = self.rows
        pending, self._pending = self._pending, []
        for i, row, sym in pending:
            if f.is_zero(row):
                continue
            self.reinjected += 1
            self._forward(row, i, f.sym_out(sym))

    def extract(self):
        if not self.decoded:
            raise DecoderStateError(f"generation not decoded yet (rank {self.rank}/{self.g})")
        f = self.rows
        out = np.empty((self.g, self.cfg.symbol_size), dtype=np.uint8)
        for i, sym in enumerate(self.X):
            out[i] = np.frombuffer(f.sym_out(sym), dtype=np.uint8)
        return out

    # inspection helpers

    def coding_matrix(self):
        return np.stack([self.rows.to_dense(r) for r in self.G])

    def row_width(self, i):
        """Circular distance from pivot ``i`` to the last nonzero of row ``i``."""
        dense = self.rows.to_dense(self.G[i])
        nz = np.flatnonzero(dense)
        if nz.size == 0:
            return -1
        return int(((nz - i) % self.g).max())

    def symbol(self, i):
        return self.rows.sym_out(self.X[i])

    @property
    def ops_total(self):
        return self.ops_fly + self.ops_final

    @property
    def packets_needed(self):
        return self.received


def _chain(i, bottom, g):
    # rows strictly between i and the bottom band cannot reach back to column i
    yield i
    yield from range(max(i + 1, bottom), g)


__all__ = [
    "ConsumeOutcome",
    "Decoder",
    "DecoderStateError",
    "Outcome",
    "check_packet",
]
