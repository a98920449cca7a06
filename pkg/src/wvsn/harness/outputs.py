"""CSV tables and SVG charts for an :class:`~wvsn.harness.experiment.Experiment`."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from ..traffic import Mode, TrafficClass
from .experiment import KEYS, Experiment

COLORS = {"mmspeed": "#1f77b4", "qbsa": "#ff7f0e", "eqbsa": "#2ca02c"}


def _num(x: float) -> str:
    return repr(float(x))


def _write(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def alive_rows(exp: Experiment):
    first = exp.summaries[exp.protocols[0]]
    for k, t in enumerate(first.alive_time):
        yield [_num(t)] + [_num(exp.summaries[p].alive_mean[k]) for p in exp.protocols]


def cell_rows(exp: Experiment, attr: str, extra: str | None = None):
    for p in exp.protocols:
        s = exp.summaries[p]
        for mode, cls in KEYS:
            m, sd = getattr(s, attr)[mode, cls]
            if math.isnan(m):
                continue  # no traffic of this kind (e.g. ROI in Standby)
            row = [p, mode.name, cls.name, _num(m), _num(sd)]
            if extra:
                row += [_num(v) for v in getattr(s, extra)[mode, cls]]
            yield row


def psnr_rows(exp: Experiment):
    for p in exp.protocols:
        s = exp.summaries[p]
        for f, t, md, m, sd in zip(s.psnr_frames, s.psnr_times, s.psnr_modes, s.psnr_frame_mean, s.psnr_frame_std):
            yield [p, int(f), _num(t), Mode(int(md)).name, _num(m), _num(sd)]


def summary_rows(exp: Experiment):
    for p in exp.protocols:
        s = exp.summaries[p]
        for metric in ("first_death", "half_death", "psnr_mean", "energy_consumed"):
            m, sd = getattr(s, metric)
            yield [p, metric, _num(m), _num(sd)]


# -- charts -----------------------------------------------------------------

def _save(fig: Figure, path: Path) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "wvsn", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _line_chart(exp: Experiment, path: Path, xs, ys, title: str, xlabel: str, ylabel: str) -> None:
    fig = Figure(figsize=(7, 3.5))
    ax = fig.add_subplot()
    for p in exp.protocols:
        ax.plot(xs(p), ys(p), label=p, color=COLORS.get(p))
    ax.set(title=title, xlabel=xlabel, ylabel=ylabel)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def _bar_chart(exp: Experiment, path: Path, attr: str, title: str, ylabel: str, mode: Mode = Mode.RUSH) -> None:
    fig = Figure(figsize=(6, 3.5))
    ax = fig.add_subplot()
    width = 0.8 / max(1, len(exp.protocols))
    classes = list(TrafficClass)
    for k, p in enumerate(exp.protocols):
        vals = [getattr(exp.summaries[p], attr)[mode, c] for c in classes]
        ax.bar([i + k * width for i in range(len(classes))], [v[0] for v in vals], width,
               yerr=[0.0 if math.isnan(v[1]) else v[1] for v in vals], label=p, color=COLORS.get(p), capsize=3)
    ax.set_xticks([i + width * (len(exp.protocols) - 1) / 2 for i in range(len(classes))], [c.name for c in classes])
    ax.set(title=title, ylabel=ylabel)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def emit_outputs(exp: Experiment, out_dir) -> list[Path]:
    """Write the CSV tables, per-run CSVs and SVG charts; returns the paths."""
    out = Path(out_dir)
    try:
        (out / "runs").mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot write outputs to {out}: {e}") from e
    written = []

    def put(name, header, rows):
        _write(out / name, header, rows)
        written.append(out / name)

    put("alive.csv", ["time", *exp.protocols], alive_rows(exp))
    put("delay.csv", ["protocol", "mode", "class", "mean", "std", "within_deadline_mean", "within_deadline_std"],
        cell_rows(exp, "delay", "within_deadline"))
    put("pdr.csv", ["protocol", "mode", "class", "mean", "std"], cell_rows(exp, "pdr"))
    put("psnr.csv", ["protocol", "frame", "time", "mode", "mean", "std"], psnr_rows(exp))
    put("summary.csv", ["protocol", "metric", "mean", "std"], summary_rows(exp))
    for (p, r), res in sorted(exp.runs.items(), key=lambda kv: (exp.protocols.index(kv[0][0]), kv[0][1])):
        path = out / "runs" / f"{p}_r{r:03d}.csv"
        path.write_text(res.csv)
        written.append(path)
        if res.trace_csv is not None:
            tpath = out / "runs" / f"{p}_r{r:03d}_trace.csv"
            tpath.write_text(res.trace_csv)
            written.append(tpath)

    s = exp.summaries
    _line_chart(exp, out / "alive.svg", lambda p: s[p].alive_time, lambda p: s[p].alive_mean,
                "Alive nodes", "time (s)", "alive nodes")
    _bar_chart(exp, out / "delay.svg", "delay", "Mean end-to-end delay, Rush mode", "delay (s)")
    _bar_chart(exp, out / "pdr.svg", "pdr", "Packet delivery ratio, Rush mode", "PDR")
    _line_chart(exp, out / "psnr.svg", lambda p: s[p].psnr_times, lambda p: s[p].psnr_frame_mean,
                "PSNR of the displayed stream", "capture time (s)", "PSNR (dB)")
    written += [out / n for n in ("alive.svg", "delay.svg", "pdr.svg", "psnr.svg")]
    return written
