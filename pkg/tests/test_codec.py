import json
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from golden_cases import make_packet
from perpetual.codec import (
    CodeConfig,
    CodingVector,
    Encoder,
    EncoderMode,
    MalformedPacketError,
    Packet,
    combine,
    compact,
    deserialize,
    encode,
    expand,
    packet_size,
    serialize,
    vector_bits,
)
from perpetual.gf import mul_slow

GOLDEN = json.loads((Path(__file__).parent / "data" / "golden_packets.json").read_text())


def scalar_symbol(gen, dense, q):
    # independent oracle: element-by-element field arithmetic
    out = [0] * gen.shape[1]
    for i, c in enumerate(dense):
        if c:
            for k in range(gen.shape[1]):
                out[k] ^= int(gen[i, k]) if q == 2 else mul_slow(int(c), int(gen[i, k]))
    return bytes(out)


@pytest.mark.parametrize(
    "g,w,q,bits", [(32, 12, 2, 17), (2048, 96, 2, 107), (256, 4, 256, 40), (100, 3, 2, 10)]
)
def test_vector_bits(g, w, q, bits):
    assert vector_bits(CodeConfig(g, w, q)) == bits


def test_config_validation():
    with pytest.raises(ValueError):
        CodeConfig(8, 8)
    with pytest.raises(ValueError):
        CodeConfig(0, 0)
    with pytest.raises(ValueError):
        CodeConfig(70000, 3)
    with pytest.raises(ValueError):
        CodeConfig(8, 3, q=3)
    with pytest.raises(ValueError):
        CodeConfig(8, 3, symbol_size=0)


def test_expand_examples():
    cfg = CodeConfig(5, 2, 256)
    assert expand(CodingVector(0, [7, 9]), cfg).tolist() == [1, 7, 9, 0, 0]
    cfg = CodeConfig(5, 1, 256)
    assert np.flatnonzero(expand(CodingVector(4, [3]), cfg)).tolist() == [0, 4]


def test_wraparound_window_for_last_pivot():
    cfg = CodeConfig(8, 3, 2)
    dense = expand(CodingVector(7, [1, 1, 1]), cfg)
    assert set(np.flatnonzero(dense)) == {7, 0, 1, 2}


@settings(max_examples=200)
@given(st.integers(2, 40), st.data())
def test_compact_expand_round_trip(g, data):
    w = data.draw(st.integers(0, g - 1))
    q = data.draw(st.sampled_from([2, 256]))
    cfg = CodeConfig(g, w, q)
    pivot = data.draw(st.integers(0, g - 1))
    coeffs = data.draw(st.lists(st.integers(0, q - 1), min_size=w, max_size=w))
    if w:
        coeffs[-1] = max(coeffs[-1], 1)
    v = CodingVector(pivot, coeffs)
    assert compact(expand(v, cfg), cfg, pivot) == v
    if 2 * w < g:
        # the narrowest window is unambiguous when the band covers less than half the circle
        assert compact(expand(v, cfg), cfg) == v


def test_compact_rejects_bad_pivot():
    cfg = CodeConfig(6, 2, 256)
    with pytest.raises(ValueError):
        compact(np.array([2, 1, 0, 0, 0, 0]), cfg, 0)
    with pytest.raises(ValueError):
        compact(np.zeros(6, np.uint8), cfg)


def test_source_vectors_stay_in_band():
    cfg = CodeConfig(40, 7, 256, 4)
    gen = np.zeros((40, 4), np.uint8)
    enc = Encoder(gen, cfg, EncoderMode.RANDOM, 3)
    for _ in range(500):
        v = enc.next_vector()
        dense = expand(v, cfg)
        offsets = (np.flatnonzero(dense) - v.pivot) % cfg.g
        assert dense[v.pivot] == 1
        assert offsets.max() <= cfg.w
        assert np.count_nonzero(dense) <= cfg.w + 1


@pytest.mark.parametrize("q", [2, 256])
def test_symbol_matches_scalar_oracle(q):
    cfg = CodeConfig(12, 5, q, 6)
    rng = np.random.default_rng(5)
    gen = rng.integers(0, 256, (12, 6), dtype=np.uint8)
    enc = Encoder(gen, cfg, EncoderMode.RANDOM, rng)
    for _ in range(50):
        pkt = enc.encode()
        assert pkt.symbol == scalar_symbol(gen, expand(pkt.vector, cfg), q)


def test_systematic_mode():
    cfg = CodeConfig(6, 0, 256, 4)
    gen = np.arange(24, dtype=np.uint8).reshape(6, 4)
    enc = Encoder(gen, cfg, EncoderMode.SYSTEMATIC, 0)
    first = [enc.encode() for _ in range(6)]
    assert [p.pivot for p in first] == list(range(6))
    for k, p in enumerate(first):
        assert p.width == 0 and p.symbol == gen[k].tobytes()
    later = [enc.encode() for _ in range(30)]
    assert all(p.width == 0 and p.symbol == gen[p.pivot].tobytes() for p in later)


def test_sequential_cursor_cycles():
    cfg = CodeConfig(5, 2, 2, 1)
    enc = Encoder(np.zeros((5, 1), np.uint8), cfg, EncoderMode.SEQUENTIAL, 0)
    assert [enc.encode().pivot for _ in range(12)] == [0, 1, 2, 3, 4, 0, 1, 2, 3, 4, 0, 1]


def test_zero_width_needs_systematic_mode():
    cfg = CodeConfig(5, 0, 2, 1)
    with pytest.raises(ValueError):
        Encoder(np.zeros((5, 1), np.uint8), cfg, EncoderMode.RANDOM)


def test_generation_shape_checked():
    with pytest.raises(ValueError):
        encode(np.zeros((4, 3), np.uint8), CodeConfig(5, 2, 2, 3))


def test_zero_generation_gives_zero_symbols():
    cfg = CodeConfig(16, 4, 2, 8)
    enc = Encoder(np.zeros((16, 8), np.uint8), cfg, EncoderMode.RANDOM, 1)
    assert all(enc.encode().symbol == bytes(8) for _ in range(50))


def test_encoding_is_linear_over_gf2():
    cfg = CodeConfig(20, 6, 2, 8)
    rng = np.random.default_rng(9)
    a, b = rng.integers(0, 256, (2, 20, 8), dtype=np.uint8)
    ea, eb, ex = (Encoder(m, cfg, EncoderMode.RANDOM, 42) for m in (a, b, a ^ b))
    for _ in range(50):
        pa, pb, px = ea.encode(), eb.encode(), ex.encode()
        assert pa.vector == pb.vector == px.vector
        assert px.symbol == bytes(x ^ y for x, y in zip(pa.symbol, pb.symbol))


def test_random_pivots_are_uniform():
    g, n = 32, 100_000
    enc = Encoder(np.zeros((g, 1), np.uint8), CodeConfig(g, 4, 2, 1), EncoderMode.RANDOM, 2024)
    counts = np.bincount([enc.next_pivot() for _ in range(n)], minlength=g)
    mean = n / g
    sigma = np.sqrt(n * (1 / g) * (1 - 1 / g))
    assert np.all(np.abs(counts - mean) < 4 * sigma)


def test_zero_coefficients_are_drawn():
    enc = Encoder(np.zeros((64, 1), np.uint8), CodeConfig(64, 20, 2, 1), EncoderMode.RANDOM, 0)
    nz = np.mean([np.count_nonzero(enc.next_vector().coeffs) for _ in range(2000)])
    assert abs(nz - 10) < 0.5


# wire format


def test_wire_size_example():
    cfg = CodeConfig(32, 12, 2, 16)
    pkt = encode(np.zeros((32, 16), np.uint8), cfg, EncoderMode.RANDOM, 0)
    assert len(serialize(pkt, cfg)) == 22 == packet_size(cfg)


@pytest.mark.parametrize("q", [2, 256])
@pytest.mark.parametrize("w", [1, 3, 8, 9, 17])
def test_wire_size_formula(q, w):
    cfg = CodeConfig(40, w, q, 10)
    pkt = encode(np.ones((40, 10), np.uint8), cfg, EncoderMode.RANDOM, w)
    coeff_bytes = (w + 7) // 8 if q == 2 else w
    assert len(serialize(pkt, cfg)) == 4 + coeff_bytes + 10


def test_wire_layout_by_hand():
    cfg = CodeConfig(300, 10, 2, 2)
    pkt = Packet(CodingVector(258, [1, 0, 0, 0, 0, 0, 0, 0, 1, 1]), b"\xab\xcd")
    wire = serialize(pkt, cfg)
    assert wire == struct.pack(">HH", 10, 258) + bytes([0x01, 0x03]) + b"\xab\xcd"
    cfg = CodeConfig(300, 3, 256, 1)
    wire = serialize(Packet(CodingVector(1, [5, 0, 200]), b"\x07"), cfg)
    assert wire == bytes([0, 3, 0, 1, 5, 0, 200, 7])


@settings(max_examples=300)
@given(st.integers(2, 300), st.sampled_from([2, 256]), st.integers(1, 20), st.data())
def test_wire_round_trip(g, q, symbol_size, data):
    w = data.draw(st.integers(0, g - 1))
    cfg = CodeConfig(g, w, q, symbol_size)
    width = data.draw(st.integers(0, cfg.max_width))
    v = CodingVector(data.draw(st.integers(0, g - 1)), data.draw(st.lists(st.integers(0, q - 1), min_size=width, max_size=width)))
    pkt = Packet(v, data.draw(st.binary(min_size=symbol_size, max_size=symbol_size)))
    wire = serialize(pkt, cfg)
    back = deserialize(wire, cfg)
    assert back == pkt
    assert serialize(back, cfg) == wire


def test_malformed_buffers_rejected():
    cfg = CodeConfig(32, 4, 2, 4)
    good = serialize(Packet(CodingVector(3, [1, 0, 1, 1]), b"abcd"), cfg)
    deserialize(good, cfg)
    bad = [
        good[:3],
        good[:-1],
        good + b"x",
        struct.pack(">HH", 9, 3) + good[4:],
        struct.pack(">HH", 4, 32) + good[4:],
        good[:4] + bytes([good[4] | 0x80]) + good[5:],
    ]
    for buf in bad:
        with pytest.raises(MalformedPacketError):
            deserialize(buf, cfg)


def test_width_must_stay_below_g():
    cfg = CodeConfig(5, 4, 256, 1)
    with pytest.raises(MalformedPacketError):
        deserialize(struct.pack(">HH", 5, 0) + bytes(5) + b"\x00", cfg)


def test_serialize_rejects_bad_packets():
    cfg = CodeConfig(8, 2, 2, 2)
    with pytest.raises(MalformedPacketError):
        serialize(Packet(CodingVector(0, [1, 0, 1, 1, 1]), b"ab"), cfg)
    with pytest.raises(MalformedPacketError):
        serialize(Packet(CodingVector(0, [1]), b"abc"), cfg)
    with pytest.raises(MalformedPacketError):
        serialize(Packet(CodingVector(0, [2]), b"ab"), cfg)


@pytest.mark.parametrize("case", GOLDEN, ids=lambda c: f"g{c['g']}w{c['w']}q{c['q']}-{c['mode']}-{c['seed']}")
def test_golden_packets(case):
    args = [case[k] for k in ("g", "w", "q", "symbol_size", "mode", "seed", "index")]
    cfg, gen, pkt, wire = make_packet(*args)
    assert wire.hex() == case["wire"]
    back = deserialize(bytes.fromhex(case["wire"]), cfg)
    assert back.symbol == scalar_symbol(gen, expand(back.vector, cfg), cfg.q)
    assert np.array_equal(combine(gen, back.vector, cfg), np.frombuffer(back.symbol, np.uint8))
