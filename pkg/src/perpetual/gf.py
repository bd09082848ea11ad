"""Arithmetic over GF(2) and GF(2^8) plus bulk row operations on symbol buffers.

GF(2^8) uses the reduction polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D).
Tables are built once at import time from the shift-and-reduce definition
in :func:`mul_slow`, which doubles as the test oracle.
"""

import numpy as np

POLY = 0x11D
FIELDS = (2, 256)


def check_field(q):
    if q not in FIELDS:
        raise ValueError(f"unsupported field size q={q}, expected one of {FIELDS}")
    return q


def mul_slow(a, b, poly=POLY):
    """Carry-less multiply with modular reduction, one bit at a time."""
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= poly
    return result


def _build_tables():
    exp = np.zeros(512, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x = mul_slow(x, 2)
    exp[255:510] = exp[:255]
    mul = np.zeros((256, 256), dtype=np.uint8)
    nz = np.arange(1, 256)
    mul[1:, 1:] = exp[log[nz][:, None] + log[nz][None, :]]
    inv = np.zeros(256, dtype=np.uint8)
    inv[1:] = exp[(255 - log[nz]) % 255]
    return exp, log, mul, inv


EXP, LOG, MUL, INV = _build_tables()
# plain-int copies for scalar hot paths
_MUL_LIST = MUL.tolist()
_INV_LIST = INV.tolist()


def gf_add(a, b):
    return a ^ b


def gf_mul(a, b, q=256):
    if q == 2:
        return a & b
    return _MUL_LIST[a][b]


def gf_inv(a, q=256):
    if a == 0:
        raise ZeroDivisionError("zero has no multiplicative inverse")
    if q == 2:
        return 1
    return _INV_LIST[a]


def row_madd(dst, src, coeff, q=256):
    """In place ``dst ^= coeff * src`` on equal-length uint8 buffers.

    For ``q=2`` both buffers hold bit-packed elements and ``coeff`` must be 1,
    so the operation is a plain XOR of the packed bytes.
    """
    if len(dst) != len(src):
        raise ValueError(f"row length mismatch: {len(dst)} != {len(src)}")
    if q == 2 or coeff == 1:
        np.bitwise_xor(dst, src, out=dst)
    else:
        np.bitwise_xor(dst, MUL[coeff][src], out=dst)
    return dst


def row_scale(row, coeff):
    """Multiply a GF(2^8) row by a scalar, returning a new array."""
    return MUL[coeff][row]


def pack_bits(elements):
    """Pack 0/1 elements LSB-first into bytes."""
    return np.packbits(np.asarray(elements, dtype=np.uint8), bitorder="little")


def unpack_bits(packed, count):
    return np.unpackbits(np.asarray(packed, dtype=np.uint8), count=count, bitorder="little")
