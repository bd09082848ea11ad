"""Code configuration, compact coding vectors, encoder modes and the wire format.

A perpetual coding vector is a pivot ``p`` with an implied coefficient of 1
followed by ``w'`` random coefficients for the circular offsets
``p+1 .. p+w'`` (mod ``g``).
"""

import enum
import math
import struct
from dataclasses import dataclass

import numpy as np

from .gf import MUL, check_field

MAX_GENERATION = 0xFFFF


class MalformedPacketError(ValueError):
    """Raised for wire buffers or packets that violate the session config."""


@dataclass(frozen=True)
class CodeConfig:
    g: int
    w: int
    q: int = 2
    symbol_size: int = 32

    def __post_init__(self):
        if not 1 <= self.g <= MAX_GENERATION:
            raise ValueError(f"g must be in [1, {MAX_GENERATION}], got {self.g}")
        if not 0 <= self.w < self.g:
            raise ValueError(f"w must satisfy 0 <= w < g, got w={self.w}, g={self.g}")
        check_field(self.q)
        if self.symbol_size < 1:
            raise ValueError("symbol_size must be at least 1")

    @property
    def max_width(self):
        """Largest width accepted on the wire (recoded packets may reach 2w)."""
        return min(2 * self.w, self.g - 1)

    def coeff_bytes(self, width):
        if self.q == 2:
            return (width + 7) // 8
        return width


class EncoderMode(enum.Enum):
    RANDOM = "random"
    SEQUENTIAL = "sequential"
    SYSTEMATIC = "systematic"


class CodingVector:
    """Compact coding vector: a pivot and the coefficients that follow it."""

    __slots__ = ("pivot", "coeffs")

    def __init__(self, pivot, coeffs=()):
        self.pivot = int(pivot)
        self.coeffs = np.asarray(coeffs, dtype=np.uint8)

    @property
    def width(self):
        return len(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, CodingVector):
            return NotImplemented
        return self.pivot == other.pivot and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"CodingVector(pivot={self.pivot}, coeffs={self.coeffs.tolist()})"


class Packet:
    __slots__ = ("vector", "symbol")

    def __init__(self, vector, symbol):
        self.vector = vector
        self.symbol = bytes(symbol)

    @property
    def pivot(self):
        return self.vector.pivot

    @property
    def width(self):
        return self.vector.width

    def __eq__(self, other):
        if not isinstance(other, Packet):
            return NotImplemented
        return self.vector == other.vector and self.symbol == other.symbol

    def __repr__(self):
        return f"Packet({self.vector!r}, symbol={self.symbol.hex()})"


def vector_bits(cfg):
    """Bits needed for the minimal coding-vector representation."""
    return math.ceil(math.log2(cfg.g)) + cfg.w * math.ceil(math.log2(cfg.q))


def expand(v, cfg):
    """Dense length-g coefficient array for a compact vector."""
    dense = np.zeros(cfg.g, dtype=np.uint8)
    dense[v.pivot] = 1
    if v.width:
        dense[(v.pivot + 1 + np.arange(v.width)) % cfg.g] = v.coeffs
    return dense


def circular_width(dense, pivot):
    """Largest circular offset from ``pivot`` holding a nonzero coefficient."""
    g = len(dense)
    nz = np.flatnonzero(dense)
    if nz.size == 0:
        return 0
    return int(((nz - pivot) % g).max())


def band_pivot(dense):
    """Start of the narrowest circular window holding every nonzero.

    That is the index right after the longest circular run of zeros.
    """
    dense = np.asarray(dense)
    g = len(dense)
    nz = np.flatnonzero(dense)
    if nz.size == 0:
        raise ValueError("the zero vector has no pivot")
    gaps = (np.roll(nz, -1) - nz) % g
    gaps[gaps == 0] = g
    return int(nz[(int(np.argmax(gaps)) + 1) % nz.size])


def compact(dense, cfg, pivot=None):
    """Inverse of :func:`expand`.

    Without an explicit pivot the narrowest circular window holding every
    nonzero is used, i.e. the pivot follows the longest circular run of zeros.
    The coefficient at the pivot must be 1.
    """
    dense = np.asarray(dense, dtype=np.uint8)
    g = cfg.g
    if not dense.any():
        raise ValueError("cannot compact the zero vector")
    if pivot is None:
        pivot = band_pivot(dense)
    if dense[pivot] != 1:
        raise ValueError(f"coefficient at pivot {pivot} is {dense[pivot]}, expected 1")
    width = circular_width(dense, pivot)
    coeffs = dense[(pivot + 1 + np.arange(width)) % g]
    return CodingVector(pivot, coeffs)


def combine(generation, v, cfg):
    """Coded symbol for vector ``v``: the pivot row plus the weighted window rows."""
    gen = np.asarray(generation)
    out = gen[v.pivot].copy()
    if v.width:
        offsets = np.flatnonzero(v.coeffs)
        if offsets.size:
            rows = gen[(v.pivot + 1 + offsets) % cfg.g]
            if cfg.q == 256:
                rows = MUL[v.coeffs[offsets][:, None], rows]
            out ^= np.bitwise_xor.reduce(rows, axis=0)
    return out


def check_generation(generation, cfg):
    gen = np.asarray(generation, dtype=np.uint8)
    if gen.shape != (cfg.g, cfg.symbol_size):
        raise ValueError(
            f"generation shape {gen.shape} does not match (g, symbol_size)=({cfg.g}, {cfg.symbol_size})"
        )
    return gen


def random_generation(cfg, rng):
    return np.random.default_rng(rng).integers(0, 256, size=(cfg.g, cfg.symbol_size), dtype=np.uint8)


class Encoder:
    """Source encoder producing perpetual packets from one generation.

    ``mode`` selects how pivots are drawn; ``rng`` is a
    :class:`numpy.random.Generator` (or a seed) and is advanced once per
    packet for the pivot and once for the coefficients.
    """

    def __init__(self, generation, cfg, mode=EncoderMode.RANDOM, rng=None):
        self.cfg = cfg
        self.generation = check_generation(generation, cfg)
        self.mode = EncoderMode(mode)
        if cfg.w == 0 and self.mode is not EncoderMode.SYSTEMATIC:
            raise ValueError("w=0 is only valid in systematic mode")
        self.rng = np.random.default_rng(rng)
        self._cursor = 0

    def next_pivot(self):
        g = self.cfg.g
        if self.mode is EncoderMode.SEQUENTIAL:
            p = self._cursor
            self._cursor = (p + 1) % g
            return p
        if self.mode is EncoderMode.SYSTEMATIC and self._cursor < g:
            p = self._cursor
            self._cursor += 1
            return p
        return int(self.rng.integers(g))

    def next_vector(self):
        pivot = self.next_pivot()
        if self.mode is EncoderMode.SYSTEMATIC:
            return CodingVector(pivot)
        coeffs = self.rng.integers(0, self.cfg.q, size=self.cfg.w, dtype=np.uint8)
        return CodingVector(pivot, coeffs)

    def encode(self):
        v = self.next_vector()
        return Packet(v, combine(self.generation, v, self.cfg).tobytes())

    def __iter__(self):
        while True:
            yield self.encode()


def encode(generation, cfg, mode=EncoderMode.RANDOM, rng=None):
    """Single packet from a fresh encoder; use :class:`Encoder` for streams."""
    return Encoder(generation, cfg, mode, rng).encode()


# Wire format, big-endian:
#   u16 width | u16 pivot | coefficients | symbol
# q=2 coefficients are bit-packed LSB-first, offset j at bit (j-1).
_HEADER = struct.Struct(">HH")


def packet_size(cfg, width=None):
    width = cfg.w if width is None else width
    return _HEADER.size + cfg.coeff_bytes(width) + cfg.symbol_size


def serialize(pkt, cfg):
    v = pkt.vector
    _validate(v.pivot, v.width, cfg)
    if len(pkt.symbol) != cfg.symbol_size:
        raise MalformedPacketError(f"symbol has {len(pkt.symbol)} bytes, expected {cfg.symbol_size}")
    if cfg.q == 2:
        if v.width and v.coeffs.max() > 1:
            raise MalformedPacketError("binary coefficients must be 0 or 1")
        body = np.packbits(v.coeffs, bitorder="little").tobytes()
    else:
        body = v.coeffs.tobytes()
    return _HEADER.pack(v.width, v.pivot) + body + pkt.symbol


def deserialize(buf, cfg):
    buf = bytes(buf)
    if len(buf) < _HEADER.size:
        raise MalformedPacketError("truncated header")
    width, pivot = _HEADER.unpack_from(buf)
    _validate(pivot, width, cfg)
    nbytes = cfg.coeff_bytes(width)
    expected = _HEADER.size + nbytes + cfg.symbol_size
    if len(buf) != expected:
        raise MalformedPacketError(f"packet is {len(buf)} bytes, expected {expected}")
    raw = np.frombuffer(buf, dtype=np.uint8, count=nbytes, offset=_HEADER.size)
    if cfg.q == 2:
        coeffs = np.unpackbits(raw, count=width, bitorder="little")
        if width % 8 and raw[-1] >> (width % 8):
            raise MalformedPacketError("padding bits must be zero")
    else:
        coeffs = raw.copy()
    return Packet(CodingVector(pivot, coeffs), buf[_HEADER.size + nbytes:])


def _validate(pivot, width, cfg):
    if pivot >= cfg.g:
        raise MalformedPacketError(f"pivot {pivot} out of range for g={cfg.g}")
    if width > 2 * cfg.w:
        raise MalformedPacketError(f"width {width} exceeds 2w={2 * cfg.w}")
    if width >= cfg.g:
        raise MalformedPacketError(f"width {width} must be below g={cfg.g}")
