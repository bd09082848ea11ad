"""Command-line harness: analytic curves, Monte-Carlo runs and benchmarks as CSV.

Exit codes: 0 success, 1 invalid arguments, 2 a round-trip check failed.
``NC_SEED`` in the environment overrides ``--seed``.
"""

import argparse
import csv
import io
import os
import sys
import time
from collections import Counter

import numpy as np

from . import analysis, sim
from .codec import (
    CodeConfig,
    Encoder,
    EncoderMode,
    MalformedPacketError,
    deserialize,
    random_generation,
    serialize,
)
from .decoder import Decoder
from .recoder import RecodeKind, RecodePolicy
from .rlnc import RlncDecoder, RlncEncoder

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2

BENCH_GRID = ((32, 12), (128, 24), (512, 48), (2048, 96))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _range(text):
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


def _grid(text):
    pairs = []
    for item in text.split(","):
        try:
            g, w = (int(x) for x in item.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected G:W pairs, got {item!r}") from None
        pairs.append((g, w))
    return pairs


def _prob(text):
    x = float(text)
    if not 0.0 <= x < 1.0:
        raise argparse.ArgumentTypeError(f"erasure probability must be in [0, 1), got {text}")
    return x


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def _config(g, w, q, symbol_size):
    try:
        return CodeConfig(g, w, q, symbol_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser():
    p = _Parser(prog="perpetual", description=__doc__.splitlines()[0])
    p.add_argument("--output", "-o", help="write CSV here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, trials=100):
        sp.add_argument("--q", type=int, default=2, choices=(2, 256))
        sp.add_argument("--symbol-size", type=int, default=32)
        sp.add_argument("--trials", type=int, default=trials)
        sp.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bounds", help="analytic overhead or op-count bounds")
    b.add_argument("--g", type=_ints, default=[32])
    b.add_argument("--q", type=int, default=2, choices=(2, 256))
    b.add_argument("--w-range", type=_range, default=None, help="inclusive LO:HI, default 1:g-1")
    b.add_argument("--table", choices=("overhead", "ops"), default="overhead")

    o = sub.add_parser("overhead", help="Monte-Carlo code overhead")
    o.add_argument("--g", type=_ints, default=[32])
    o.add_argument("--w", type=_ints, default=[12])
    o.add_argument("--mode", choices=[m.value for m in EncoderMode], default="random")
    o.add_argument("--codec", choices=("perpetual", "rlnc"), default="perpetual")
    common(o)

    s = sub.add_parser("ops", help="measured row operations per symbol against the bounds")
    s.add_argument("--g", type=_ints, default=[32])
    s.add_argument("--w", type=_ints, default=[12])
    s.add_argument("--rlnc", action="store_true", help="add a dense RLNC row per g")
    common(s)

    t = sub.add_parser("twohop", help="relay recoding: analytic vs empirical kind distribution")
    t.add_argument("--g", type=int, default=512)
    t.add_argument("--w", type=int, default=48)
    t.add_argument("--mu", type=int, default=12)
    t.add_argument("--delta-max", type=int, default=None)
    t.add_argument("--eps-ar", type=_prob, default=0.3)
    t.add_argument("--eps-rb", type=_prob, default=0.3)
    common(t, trials=20)
    t.set_defaults(symbol_size=8)

    r = sub.add_parser("roundtrip", help="encode/decode/recode correctness sweep")
    r.add_argument("--g", type=_ints, default=[8, 32, 128])
    r.add_argument("--q", type=_ints, default=[2, 256])
    r.add_argument("--symbol-size", type=int, default=32)
    r.add_argument("--trials", type=int, default=20)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--corrupt-every", type=int, default=7, help="corrupt every n-th serialized packet (0: never)")

    h = sub.add_parser("bench", help="wall-clock encode/decode throughput in MB/s")
    h.add_argument("--grid", type=_grid, default=list(BENCH_GRID), help="G:W pairs")
    h.add_argument("--q", type=int, default=2, choices=(2, 256))
    h.add_argument("--symbol-size", type=int, default=1400)
    h.add_argument("--trials", type=int, default=1)
    h.add_argument("--seed", type=int, default=0)
    return p


# subcommands; each returns (header, rows, exit_code)


def cmd_bounds(args):
    if args.table == "overhead":
        header = ["g", "w", "q", "alpha", "beta", "upper"]
    else:
        header = ["g", "w", "q", "fly", "forward1", "forward2", "total"]
    rows = []
    for g in args.g:
        ws = args.w_range if args.w_range is not None else range(1, g)
        for w in ws:
            if not 1 <= w < g:
                continue
            if args.table == "overhead":
                b = analysis.overhead_upper(g, w, args.q)
                rows.append([g, w, args.q, b.alpha, b.beta, b.upper])
            else:
                b = analysis.op_bounds(g, w, args.q)
                rows.append([g, w, args.q, b.fly, b.forward1, b.forward2, b.total])
    return header, rows, EXIT_OK


def _cells(gs, ws):
    cells = [(g, w) for g in gs for w in ws if w < g]
    if not cells:
        raise UsageError("no (g, w) combination with w < g")
    return cells


def cmd_overhead(args):
    header = ["codec", "g", "w", "q", "mode", "trials", "mean_overhead", "stddev", "alpha", "upper"]
    rows = []
    if args.codec == "rlnc":
        for g in args.g:
            cfg = _config(g, 0, args.q, args.symbol_size)
            st = sim.run_rlnc(cfg, args.trials, args.seed)
            alpha = analysis.rlnc_overhead_lower(g, args.q)
            rows.append(["rlnc", g, g, args.q, "dense", args.trials, st.mean_overhead, st.stddev, alpha, None])
        return header, rows, EXIT_OK
    mode = EncoderMode(args.mode)
    ws = [0] if mode is EncoderMode.SYSTEMATIC else args.w
    for g, w in _cells(args.g, ws):
        cfg = _config(g, w, args.q, args.symbol_size)
        st = sim.run_unicast(cfg, mode, args.trials, args.seed)
        alpha = analysis.rlnc_overhead_lower(g, args.q)
        upper = analysis.overhead_upper(g, w, args.q).upper if w >= 1 and mode is EncoderMode.RANDOM else None
        rows.append(["perpetual", g, w, args.q, mode.value, args.trials, st.mean_overhead, st.stddev, alpha, upper])
    return header, rows, EXIT_OK


def cmd_ops(args):
    header = ["codec", "g", "w", "q", "fly_meas", "final_meas", "fly_bound", "total_bound"]
    rows = []
    for g, w in _cells(args.g, args.w):
        if w < 1:
            continue
        cfg = _config(g, w, args.q, args.symbol_size)
        st = sim.run_unicast(cfg, EncoderMode.RANDOM, args.trials, args.seed)
        b = analysis.op_bounds(g, w, args.q)
        rows.append(["perpetual", g, w, args.q, st.ops_fly_per_symbol, st.ops_final_per_symbol, b.fly, b.total])
    if args.rlnc:
        for g in args.g:
            st = sim.run_rlnc(_config(g, 0, args.q, args.symbol_size), args.trials, args.seed)
            rows.append(["rlnc", g, g, args.q, st.ops_fly_per_symbol, st.ops_final_per_symbol, None, None])
    return header, rows, EXIT_OK


def cmd_twohop(args):
    cfg = _config(args.g, args.w, args.q, args.symbol_size)
    try:
        policy = RecodePolicy(args.mu, args.delta_max)
        policy.check(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    st = sim.run_two_hop(cfg, policy, args.eps_ar, args.eps_rb, args.trials, args.seed)
    emp = st.kind_distribution()
    ana = analysis.recode_delta_distribution(args.g, policy.mu, policy.delta_max)
    rows = [["passive", 0, ana.p_passive_total, emp.get((RecodeKind.PASSIVE, 0), 0.0)]]
    for d, p in ana.p_active_by_delta.items():
        rows.append(["active", d, p, emp.get((RecodeKind.ACTIVE, d), 0.0)])
    rows.append(["reencoded", 0, ana.p_reencode_total, emp.get((RecodeKind.REENCODED, 0), 0.0)])
    return ["kind", "delta", "analytic_p", "empirical_p"], rows, EXIT_OK if not st.failures else EXIT_CHECK_FAILED


def _corrupt(buf, cfg, how):
    """Damaged copy of a serialized packet that must fail to parse."""
    buf = bytearray(buf)
    if how == 0:
        return bytes(buf[:-1])
    if how == 1:
        buf[0:2] = (2 * cfg.w + 1).to_bytes(2, "big")
        return bytes(buf)
    buf[2:4] = cfg.g.to_bytes(2, "big")
    return bytes(buf)


def _roundtrip_cell(cfg, mode, trials, seed, corrupt_every):
    passed = failed = rejected = 0
    for i in range(trials):
        rng = sim.trial_rng(seed, i)
        gen = random_generation(cfg, rng)
        enc = Encoder(gen, cfg, mode, rng)
        dec = Decoder(cfg)
        n = 0
        while not dec.decoded and n < 50 * cfg.g:
            n += 1
            wire = serialize(enc.encode(), cfg)
            if corrupt_every and n % corrupt_every == 0:
                try:
                    deserialize(_corrupt(wire, cfg, n % 3), cfg)
                except MalformedPacketError:
                    rejected += 1
                else:
                    failed += 1
            dec.consume(deserialize(wire, cfg))
        if dec.decoded and np.array_equal(dec.extract(), gen):
            passed += 1
        else:
            failed += 1
    return passed, failed, rejected


def _recode_cell(cfg, trials, seed):
    policy = RecodePolicy(2, min(4, cfg.w) if cfg.w >= 2 else 2)
    passed = failed = 0
    for i in range(trials):
        ok, _, _ = sim.two_hop_trial(cfg, policy, 0.2, 0.2, sim.trial_rng(seed, i), Counter())
        passed += ok
        failed += not ok
    return passed, failed


def cmd_roundtrip(args):
    header = ["check", "g", "w", "q", "mode", "trials", "passed", "failed", "rejected"]
    rows = []
    bad = 0
    for g in args.g:
        for q in args.q:
            ws = sorted({w for w in (3, g // 4, g // 2) if 1 <= w < g})
            for w in ws:
                cfg = _config(g, w, q, args.symbol_size)
                for mode in EncoderMode:
                    c = cfg if mode is not EncoderMode.SYSTEMATIC else _config(g, 0, q, args.symbol_size)
                    if mode is EncoderMode.SYSTEMATIC and w != ws[0]:
                        continue
                    p, f, r = _roundtrip_cell(c, mode, args.trials, args.seed, args.corrupt_every)
                    rows.append(["decode", g, c.w, q, mode.value, args.trials, p, f, r])
                    bad += f
                if g > 4:
                    p, f = _recode_cell(cfg, args.trials, args.seed)
                    rows.append(["twohop", g, w, q, "random", args.trials, p, f, 0])
                    bad += f
    return header, rows, EXIT_CHECK_FAILED if bad else EXIT_OK


def _throughput(nbytes, seconds):
    return nbytes / seconds / 1e6 if seconds > 0 else float("inf")


def _bench_one(make_encoder, make_decoder, cfg, trials, seed):
    enc_time = dec_time = 0.0
    enc_bytes = dec_bytes = 0
    for i in range(trials):
        rng = sim.trial_rng(seed, i)
        gen = random_generation(cfg, rng)
        enc = make_encoder(gen, rng)
        pkts = []
        t0 = time.perf_counter()
        for _ in range(cfg.g + 50):
            pkts.append(enc.encode())
        enc_time += time.perf_counter() - t0
        enc_bytes += len(pkts) * cfg.symbol_size
        dec = make_decoder()
        t0 = time.perf_counter()
        it = iter(pkts)
        while not dec.decoded:
            pkt = next(it, None)
            if pkt is None:
                pkt = enc.encode()
            dec.consume(pkt)
        dec_time += time.perf_counter() - t0
        dec_bytes += cfg.g * cfg.symbol_size
    return _throughput(enc_bytes, enc_time), _throughput(dec_bytes, dec_time)


def cmd_bench(args):
    header = ["codec", "g", "w", "q", "enc_MBps", "dec_MBps", "gain_pct", "enc_gain_pct"]
    rows = []
    for g in sorted({g for g, _ in args.grid}):
        rcfg = _config(g, 0, args.q, args.symbol_size)
        r_enc, r_dec = _bench_one(
            lambda gen, rng: RlncEncoder(gen, rcfg, rng), lambda: RlncDecoder(rcfg), rcfg, args.trials, args.seed
        )
        for gg, w in args.grid:
            if gg != g:
                continue
            cfg = _config(g, w, args.q, args.symbol_size)
            enc, dec = _bench_one(
                lambda gen, rng: Encoder(gen, cfg, EncoderMode.RANDOM, rng),
                lambda: Decoder(cfg),
                cfg,
                args.trials,
                args.seed,
            )
            rows.append(["perpetual", g, w, args.q, enc, dec, 100 * (dec / r_dec - 1), 100 * (enc / r_enc - 1)])
        rows.append(["rlnc", g, g, args.q, r_enc, r_dec, None, None])
    return header, rows, EXIT_OK


COMMANDS = {
    "bounds": cmd_bounds,
    "overhead": cmd_overhead,
    "ops": cmd_ops,
    "twohop": cmd_twohop,
    "roundtrip": cmd_roundtrip,
    "bench": cmd_bench,
}


def _check_args(args):
    if getattr(args, "trials", 1) < 1:
        raise UsageError("--trials must be at least 1")
    if getattr(args, "symbol_size", 1) < 1:
        raise UsageError("--symbol-size must be at least 1")
    env = os.environ.get("NC_SEED")
    if env is not None and hasattr(args, "seed"):
        try:
            args.seed = int(env)
        except ValueError:
            raise UsageError(f"NC_SEED must be an integer, got {env!r}") from None


def render_csv(header, rows):
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_args(args)
        header, rows, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    text = render_csv(header, rows)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
