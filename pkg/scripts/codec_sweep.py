"""Rate/quality sweep of the codec over QP and FP on the synthetic scene.

    python scripts/codec_sweep.py [--frames 6] [--loss 0.5]
"""
import argparse

import numpy as np

from wvsn.codec import CodecConfig, decode_frame, encode_frame, psnr, synth_source
from wvsn.traffic import Mode


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--frames", type=int, default=6)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--loss", type=float, default=0.5, help="packet loss rate for the lossy column")
    ap.add_argument("--qp", type=int, nargs="+", default=[24, 28, 32, 36, 40])
    ap.add_argument("--fp", type=int, nargs="+", default=[1, 2, 4, 6, 8, 16])
    args = ap.parse_args()

    seq = synth_source(args.seed, args.frames, fps=3.0)
    rng = np.random.default_rng(args.seed)
    print(f"{'qp':>3s} {'fp':>3s} {'bits/frame':>10s} {'psnr':>7s} {'lossy':>7s}")
    for qp in args.qp:
        for fp in args.fp:
            cfg = CodecConfig(qp=qp, fp=fp)
            bits, clean, lossy = [], [], []
            for f in seq:
                enc = encode_frame(f, Mode.RUSH, cfg)
                bits.append(enc.bits)
                clean.append(psnr(f, enc.recon))
                kept = [p for p in enc.packets if rng.random() >= args.loss]
                lossy.append(psnr(f, decode_frame(kept, None, cfg)))
            print(f"{qp:3d} {fp:3d} {np.mean(bits):10.0f} {np.mean(clean):7.2f} {np.mean(lossy):7.2f}")


if __name__ == "__main__":
    main()
