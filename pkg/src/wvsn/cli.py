"""Command line: ``wvsn run``, ``wvsn codec-eval`` and ``wvsn synth``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time

import numpy as np

from .codec import CodecConfig, decode_frame, encode_frame, psnr, read_luma, synth_source, write_luma
from .routing import Variant
from .scenario import ConfigError, ScenarioConfig, load_config
from .traffic import Mode, TrafficClass

log = logging.getLogger("wvsn")


def _protocols(text: str) -> list[Variant]:
    try:
        return [Variant.parse(p) for p in text.split(",") if p.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"unknown protocol in {text!r}: {e}") from None


def _fmt(x: float, nd: int = 3) -> str:
    return "inf" if math.isinf(x) else ("nan" if math.isnan(x) else f"{x:.{nd}f}")


def cmd_run(args) -> int:
    from .harness import emit_outputs, run_experiment

    config = load_config(args.scenario) if args.scenario else ScenarioConfig()
    over = {}
    if args.seed is not None:
        over["rng_seed"] = args.seed
    if args.realizations is not None:
        over["realization_count"] = args.realizations
    if args.protocol is not None:
        v = Variant.parse(args.protocol)
        a, b = config.weights[v]
        over.update(protocol=v, alpha=a, beta=b)
    config = config.with_overrides(**over) if over else config
    protocols = args.protocols or ([config.protocol] if args.protocol else list(Variant))

    t0 = time.perf_counter()

    def progress(r, results):
        log.info("realization %d done (%.1f s)", r, time.perf_counter() - t0)

    exp = run_experiment(config, protocols, config.realization_count, workers=args.workers,
                         trace=args.verbose_trace, progress=progress)
    emit_outputs(exp, args.out)
    print(f"{len(exp.realizations)} realizations x {len(exp.protocols)} protocols in "
          f"{time.perf_counter() - t0:.1f} s -> {args.out}")
    print(f"{'protocol':10s} {'1st death':>9s} {'50% death':>9s} {'PDR ROI':>8s} {'PDR BKGD':>8s} "
          f"{'delay ROI':>9s} {'delay BKGD':>10s} {'PSNR':>6s}")
    for p in exp.protocols:
        s = exp.summaries[p]
        rush = Mode.RUSH
        print(f"{p:10s} {_fmt(s.first_death[0], 1):>9s} {_fmt(s.half_death[0], 1):>9s} "
              f"{_fmt(s.pdr[rush, TrafficClass.ROI][0]):>8s} {_fmt(s.pdr[rush, TrafficClass.BKGD][0]):>8s} "
              f"{_fmt(s.delay[rush, TrafficClass.ROI][0], 4):>9s} {_fmt(s.delay[rush, TrafficClass.BKGD][0], 4):>10s} "
              f"{_fmt(s.psnr_mean[0], 2):>6s}")
    return 0


def cmd_codec_eval(args) -> int:
    codec = CodecConfig(width=args.width, height=args.height, qp=args.qp, fp=args.fp)
    frames = read_luma(args.input, (args.width, args.height), args.fps)
    if not frames:
        raise ValueError(f"{args.input}: no frames")
    mode = Mode.parse(args.mode)
    rng = np.random.default_rng(args.seed)
    print(f"{'frame':>5s} {'bits':>8s} {'roi_bits':>8s} {'bkgd_bits':>9s} {'psnr':>7s}"
          + (f" {'psnr_loss':>9s}" if args.loss else ""))
    total, scores, lossy = 0, [], []
    prev = None
    for fr in frames:
        enc = encode_frame(fr, mode, codec)
        dec = decode_frame(enc.packets, None, codec)
        total += enc.bits
        scores.append(psnr(fr, dec))
        line = (f"{fr.index:5d} {enc.bits:8d} {enc.payload_bits(TrafficClass.ROI):8d} "
                f"{enc.payload_bits(TrafficClass.BKGD):9d} {scores[-1]:7.2f}")
        if args.loss:
            kept = [p for p in enc.packets if rng.random() >= args.loss]
            shown = decode_frame(kept, prev, codec, fr.index)
            prev = shown.luma
            lossy.append(psnr(fr, shown))
            line += f" {lossy[-1]:9.2f}"
        print(line)
    kbps = total * args.fps / len(frames) / 1e3
    print(f"mean: {total / len(frames):.0f} bits/frame, {kbps:.1f} kbit/s at {args.fps:g} fps, "
          f"PSNR {np.mean(scores):.2f} dB" + (f", with {args.loss:.0%} loss {np.mean(lossy):.2f} dB" if args.loss else ""))
    return 0


def cmd_synth(args) -> int:
    write_luma(args.out, synth_source(args.seed, args.frames, (args.width, args.height)))
    print(f"wrote {args.frames} frames to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wvsn", description="Video sensor network routing experiments.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="paired protocol comparison")
    r.add_argument("--scenario", help="scenario file (default: built-in desk preset)")
    r.add_argument("--protocols", type=_protocols, help="comma list, e.g. mmspeed,qbsa,eqbsa")
    r.add_argument("--protocol", help="run a single protocol (overrides the file's protocol)")
    r.add_argument("--realizations", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--verbose-trace", action="store_true", help="also write per-event trace CSVs")
    r.add_argument("--workers", type=int, default=1, help="parallel realization processes")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("codec-eval", help="encode/decode a raw luma file")
    c.add_argument("--input", required=True, help="headerless 8-bit luma (.y)")
    c.add_argument("--qp", type=int, default=32)
    c.add_argument("--fp", type=int, default=6)
    c.add_argument("--width", type=int, default=176)
    c.add_argument("--height", type=int, default=144)
    c.add_argument("--fps", type=float, default=3.0)
    c.add_argument("--mode", default="rush", help="rush or standby")
    c.add_argument("--loss", type=float, default=0.0, help="random packet loss rate to apply")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_codec_eval)

    s = sub.add_parser("synth", help="write a synthetic test sequence")
    s.add_argument("--out", required=True)
    s.add_argument("--frames", type=int, default=30)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--width", type=int, default=176)
    s.add_argument("--height", type=int, default=144)
    s.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as e:
        print(f"wvsn: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
