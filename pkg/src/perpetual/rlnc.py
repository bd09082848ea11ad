"""Dense random linear network coding, used as the comparison baseline.

Every coded packet mixes all g source symbols with uniform coefficients.
The decoder keeps rows in echelon form as they arrive (leading coefficient
1) and finishes with a backward pass once it holds g rows. Row operations
are counted with the same metric as the perpetual decoder.

Dense wire format: a flag byte ``0x01``, then the g coefficients (q=2:
ceil(g/8) bytes, bit-packed LSB-first; q=256: g bytes), then the symbol.
"""

import numpy as np

from ._rows import rows_for
from .codec import MalformedPacketError, check_generation
from .decoder import ConsumeOutcome, DecoderStateError, Outcome
from .gf import MUL

DENSE_FLAG = 0x01


class DensePacket:
    __slots__ = ("coeffs", "symbol")

    def __init__(self, coeffs, symbol):
        self.coeffs = np.asarray(coeffs, dtype=np.uint8)
        self.symbol = bytes(symbol)

    def __eq__(self, other):
        if not isinstance(other, DensePacket):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs) and self.symbol == other.symbol

    def __repr__(self):
        return f"DensePacket(nonzeros={int(np.count_nonzero(self.coeffs))}, symbol={self.symbol.hex()})"


def dense_combine(generation, coeffs, q):
    gen = np.asarray(generation)
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        return np.zeros(gen.shape[1], dtype=np.uint8)
    rows = gen[nz]
    if q == 256:
        rows = MUL[np.asarray(coeffs)[nz][:, None], rows]
    return np.bitwise_xor.reduce(rows, axis=0)


class RlncEncoder:
    def __init__(self, generation, cfg, rng=None):
        self.cfg = cfg
        self.generation = check_generation(generation, cfg)
        self.rng = np.random.default_rng(rng)

    def encode(self):
        coeffs = self.rng.integers(0, self.cfg.q, size=self.cfg.g, dtype=np.uint8)
        return DensePacket(coeffs, dense_combine(self.generation, coeffs, self.cfg.q).tobytes())

    def __iter__(self):
        while True:
            yield self.encode()


def rlnc_encode(generation, cfg, rng=None):
    return RlncEncoder(generation, cfg, rng).encode()


def dense_packet_size(cfg):
    return 1 + cfg.coeff_bytes(cfg.g) + cfg.symbol_size


def serialize_dense(pkt, cfg):
    if pkt.coeffs.shape != (cfg.g,):
        raise MalformedPacketError(f"dense vector must have {cfg.g} coefficients")
    if len(pkt.symbol) != cfg.symbol_size:
        raise MalformedPacketError(f"symbol has {len(pkt.symbol)} bytes, expected {cfg.symbol_size}")
    if cfg.q == 2:
        if pkt.coeffs.max(initial=0) > 1:
            raise MalformedPacketError("binary coefficients must be 0 or 1")
        body = np.packbits(pkt.coeffs, bitorder="little").tobytes()
    else:
        body = pkt.coeffs.tobytes()
    return bytes([DENSE_FLAG]) + body + pkt.symbol


def deserialize_dense(buf, cfg):
    buf = bytes(buf)
    if len(buf) != dense_packet_size(cfg):
        raise MalformedPacketError(f"dense packet is {len(buf)} bytes, expected {dense_packet_size(cfg)}")
    if buf[0] != DENSE_FLAG:
        raise MalformedPacketError(f"unexpected format flag {buf[0]:#04x}")
    nbytes = cfg.coeff_bytes(cfg.g)
    raw = np.frombuffer(buf, dtype=np.uint8, count=nbytes, offset=1)
    if cfg.q == 2:
        if cfg.g % 8 and raw[-1] >> (cfg.g % 8):
            raise MalformedPacketError("padding bits must be zero")
        coeffs = np.unpackbits(raw, count=cfg.g, bitorder="little")
    else:
        coeffs = raw.copy()
    return DensePacket(coeffs, buf[1 + nbytes:])


class RlncDecoder:
    def __init__(self, cfg):
        self.cfg = cfg
        self.g = cfg.g
        self.rows = rows_for(cfg.q, cfg.g, cfg.symbol_size)
        self.G = [None] * cfg.g
        self.X = [None] * cfg.g
        self.rank = 0
        self.ops_fly = 0
        self.ops_final = 0
        self.discarded = 0
        self.received = 0
        self.decoded = False

    def consume(self, pkt):
        cfg = self.cfg
        if pkt.coeffs.shape != (cfg.g,) or len(pkt.symbol) != cfg.symbol_size:
            raise MalformedPacketError("dense packet does not match the session config")
        if cfg.q == 2 and pkt.coeffs.max(initial=0) > 1:
            raise MalformedPacketError("binary coefficients must be 0 or 1")
        self.received += 1
        if self.decoded:
            self.discarded += 1
            return ConsumeOutcome(Outcome.DEPENDENT, self.rank)
        f = self.rows
        G = self.G
        row = f.from_dense(pkt.coeffs)
        trail = []
        while row:
            c = f.first_nonzero(row, 0)
            coef = f.coeff(row, c)
            if G[c] is None:
                sym = f.sym_in(pkt.symbol)
                for k, idx in trail:
                    sym = f.sym_madd(sym, self.X[idx], k)
                G[c] = f.normalize(row, coef)
                self.X[c] = f.sym_normalize(sym, coef)
                self.rank += 1
                if self.rank == self.g:
                    self._backward()
                    self.decoded = True
                    return ConsumeOutcome(Outcome.DECODED, self.rank, c)
                return ConsumeOutcome(Outcome.INSERTED, self.rank, c)
            row = f.madd(row, G[c], coef)
            trail.append((coef, c))
            self.ops_fly += 1
        self.discarded += 1
        return ConsumeOutcome(Outcome.DEPENDENT, self.rank)

    def _backward(self):
        f = self.rows
        G, X = self.G, self.X
        for j in range(self.g - 1, -1, -1):
            sym = X[j]
            for i, c in f.entries_after(G[j], j):
                sym = f.sym_madd(sym, X[i], c)
                self.ops_final += 1
            X[j] = sym
            G[j] = f.unit(j)

    def extract(self):
        if not self.decoded:
            raise DecoderStateError(f"generation not decoded yet (rank {self.rank}/{self.g})")
        out = np.empty((self.g, self.cfg.symbol_size), dtype=np.uint8)
        for i, sym in enumerate(self.X):
            out[i] = np.frombuffer(self.rows.sym_out(sym), dtype=np.uint8)
        return out

    @property
    def ops_total(self):
        return self.ops_fly + self.ops_final


__all__ = [
    "DensePacket",
    "RlncDecoder",
    "RlncEncoder",
    "deserialize_dense",
    "dense_packet_size",
    "rlnc_encode",
    "serialize_dense",
]
