"""Native row representations used by the decoders.

Rows and symbols are Python ints in both fields so that row addition is a
single XOR and locating the next nonzero is a bit trick. Binary rows use one
bit per column, GF(2^8) rows one byte per column.
"""

import numpy as np

from .gf import MUL, _INV_LIST


class BinaryRows:
    q = 2

    def __init__(self, g, symbol_size):
        self.g = g
        self.symbol_size = symbol_size
        self.full = (1 << g) - 1

    def from_vector(self, v):
        if not v.width:
            return 1 << v.pivot
        window = 1 | (int.from_bytes(np.packbits(v.coeffs, bitorder="little").tobytes(), "little") << 1)
        p = v.pivot
        if p == 0:
            return window
        return ((window << p) | (window >> (self.g - p))) & self.full

    def from_dense(self, dense):
        dense = np.asarray(dense, dtype=np.uint8)
        return int.from_bytes(np.packbits(dense != 0, bitorder="little").tobytes(), "little")

    def to_dense(self, row):
        if row is None:
            row = 0
        raw = np.frombuffer(row.to_bytes((self.g + 7) // 8, "little"), dtype=np.uint8)
        return np.unpackbits(raw, count=self.g, bitorder="little")

    @staticmethod
    def first_nonzero(row, start):
        hi = row >> start
        if hi:
            return start + (hi & -hi).bit_length() - 1
        return (row & -row).bit_length() - 1

    @staticmethod
    def coeff(row, i):
        return (row >> i) & 1

    @staticmethod
    def madd(dst, src, c):
        return dst ^ src

    @staticmethod
    def normalize(row, c):
        return row

    @staticmethod
    def is_zero(row):
        return not row

    @staticmethod
    def equal(a, b):
        return a == b

    @staticmethod
    def key(row):
        return row

    @staticmethod
    def copy(row):
        return row

    def zero(self):
        return 0

    @staticmethod
    def unit(i):
        return 1 << i

    def entries_after(self, row, i):
        """(column, coefficient) pairs of ``row`` right of column ``i``, ascending."""
        rest = row >> (i + 1)
        col = i + 1
        while rest:
            low = (rest & -rest).bit_length() - 1
            col += low
            yield col, 1
            rest >>= low + 1
            col += 1

    def sym_in(self, data):
        return int.from_bytes(data, "little")

    def sym_out(self, sym):
        return sym.to_bytes(self.symbol_size, "little")

    def sym_zero(self):
        return 0

    @staticmethod
    def sym_madd(dst, src, c):
        return dst ^ src

    @staticmethod
    def sym_normalize(sym, c):
        return sym


class OctetRows:
    """GF(2^8) rows as ints holding one coefficient per byte, little-endian.

    Addition stays a single XOR; scaling goes through ``bytes.translate``
    with one 256-byte multiplication table per scalar.
    """

    q = 256

    def __init__(self, g, symbol_size):
        self.g = g
        self.symbol_size = symbol_size
        self.bits = 8 * g
        self.full = (1 << self.bits) - 1

    def from_vector(self, v):
        window = int.from_bytes(b"\x01" + v.coeffs.tobytes(), "little")
        shift = 8 * v.pivot
        if not shift:
            return window
        return ((window << shift) | (window >> (self.bits - shift))) & self.full

    def from_dense(self, dense):
        return int.from_bytes(np.asarray(dense, dtype=np.uint8).tobytes(), "little")

    def to_dense(self, row):
        if row is None:
            row = 0
        return np.frombuffer(row.to_bytes(self.g, "little"), dtype=np.uint8).copy()

    @staticmethod
    def first_nonzero(row, start):
        hi = row >> (8 * start)
        if hi:
            return start + ((hi & -hi).bit_length() - 1) // 8
        return ((row & -row).bit_length() - 1) // 8

    @staticmethod
    def coeff(row, i):
        return (row >> (8 * i)) & 0xFF

    def madd(self, dst, src, c):
        if c == 1:
            return dst ^ src
        return dst ^ _scale_int(src, c, self.g)

    def normalize(self, row, c):
        """Scale ``row`` so that an entry equal to ``c`` becomes 1."""
        if c == 1:
            return row
        return _scale_int(row, _INV_LIST[c], self.g)

    @staticmethod
    def is_zero(row):
        return not row

    @staticmethod
    def equal(a, b):
        return a == b

    @staticmethod
    def key(row):
        return row

    @staticmethod
    def copy(row):
        return row

    def zero(self):
        return 0

    @staticmethod
    def unit(i):
        return 1 << (8 * i)

    def entries_after(self, row, i):
        """(column, coefficient) pairs of ``row`` right of column ``i``, ascending."""
        rest = row >> (8 * (i + 1))
        if not rest:
            return ()
        raw = rest.to_bytes(self.g, "little")
        return [(i + 1 + k, raw[k]) for k in np.flatnonzero(np.frombuffer(raw, dtype=np.uint8)).tolist()]

    def sym_in(self, data):
        return int.from_bytes(data, "little")

    def sym_out(self, sym):
        return sym.to_bytes(self.symbol_size, "little")

    def sym_zero(self):
        return 0

    def sym_madd(self, dst, src, c):
        if c == 1:
            return dst ^ src
        return dst ^ _scale_int(src, c, self.symbol_size)

    def sym_normalize(self, sym, c):
        if c == 1:
            return sym
        return _scale_int(sym, _INV_LIST[c], self.symbol_size)


_TRANSLATE = [bytes(row) for row in MUL.tolist()]


def _scale_int(value, c, nbytes):
    return int.from_bytes(value.to_bytes(nbytes, "little").translate(_TRANSLATE[c]), "little")


def rows_for(q, g, symbol_size):
    return BinaryRows(g, symbol_size) if q == 2 else OctetRows(g, symbol_size)
