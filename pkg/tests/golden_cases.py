"""Pinned packet cases; the expected bytes live in tests/data/golden_packets.json."""

import numpy as np

from perpetual.codec import CodeConfig, Encoder, EncoderMode, random_generation, serialize

CASES = [
    # g, w, q, symbol_size, mode, seed, index
    (8, 3, 2, 8, "random", 1, 0),
    (8, 3, 2, 8, "random", 1, 5),
    (32, 12, 2, 16, "random", 2, 3),
    (32, 12, 2, 16, "sequential", 3, 31),
    (32, 0, 2, 16, "systematic", 4, 7),
    (16, 5, 256, 8, "random", 5, 0),
    (16, 5, 256, 8, "sequential", 6, 17),
    (64, 20, 256, 12, "random", 7, 9),
    (128, 24, 2, 4, "random", 8, 100),
    (9, 8, 2, 3, "random", 9, 2),
]


def make_packet(g, w, q, symbol_size, mode, seed, index):
    cfg = CodeConfig(g, w, q, symbol_size)
    rng = np.random.default_rng(seed)
    gen = random_generation(cfg, rng)
    enc = Encoder(gen, cfg, EncoderMode(mode), rng)
    for _ in range(index):
        enc.encode()
    pkt = enc.encode()
    return cfg, gen, pkt, serialize(pkt, cfg)
