"""Paired multi-realization comparisons of the routing variants."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..netsim import MetricsLog, Simulation
from ..routing import Variant
from ..scenario import Deployment, ScenarioConfig, deploy, timeline
from ..traffic import Mode, TrafficClass
from .feed import VideoFeed
from .scoring import PsnrSeries, StreamFrame, reconstruct_and_score, sink_records

KEYS = [(m, c) for m in Mode for c in TrafficClass]  # (mode, class) cells reported per run


class ExperimentError(RuntimeError):
    """A realization failed; the message says which one."""


@dataclass
class RunResult:
    """Everything kept from one (protocol, realization) run."""
    protocol: str
    realization: int
    end_time: float
    death_times: np.ndarray
    first_death: float
    half_death: float
    delay: dict  # (mode, cls) -> mean delay of delivered first copies, s
    within_deadline: dict  # (mode, cls) -> share of delivered first copies that met the deadline
    pdr: dict  # (mode, cls) -> on-time first copies / emitted
    psnr: PsnrSeries | None
    copy_balance: int
    energy_balance: float
    energy_consumed: float
    csv: str
    trace_csv: str | None = None

    @property
    def psnr_mean(self) -> float:
        return self.psnr.mean(Mode.RUSH) if self.psnr is not None else math.nan

    def alive(self, t: np.ndarray) -> np.ndarray:
        dt = np.sort(self.death_times)
        return len(dt) - np.searchsorted(dt, t, side="right")


def source_stream(feed: VideoFeed, events, node: int) -> list[StreamFrame]:
    out = []
    for ev in events:
        if ev.kind == "capture" and ev.node == node:
            out.append(StreamFrame(ev.frame_index, ev.time, ev.mode, feed.layout(ev.time, ev.mode),
                                   feed.scene_frame(ev.time).luma))
    return out


def _score(log: MetricsLog, streams: dict[int, list[StreamFrame]], config: ScenarioConfig,
           deadlines) -> PsnrSeries | None:
    """Per-frame PSNR averaged over the scored (Rush) sources."""
    series = [reconstruct_and_score(sink_records(log, src), st, config.codec, deadlines)
              for src, st in sorted(streams.items())]
    if not series:
        return None
    first = series[0]
    return PsnrSeries(first.frames, first.times, first.modes, np.mean([s.values for s in series], axis=0))


def reduce_run(log: MetricsLog, deadlines, psnr: PsnrSeries | None, trace: bool = False) -> RunResult:
    delay, within, pdr = {}, {}, {}
    for mode, cls in KEYS:
        d = log.delays(cls, mode)
        delay[mode, cls] = float(d.mean()) if len(d) else math.nan
        within[mode, cls] = float(np.mean(d <= deadlines[cls] + 1e-12)) if len(d) else math.nan
        pdr[mode, cls] = log.pdr(deadlines, cls, mode)
    return RunResult(
        protocol=log.protocol, realization=log.realization, end_time=log.end_time,
        death_times=log.death_times.copy(),
        first_death=log.time_of_deaths(1 / log.node_count), half_death=log.time_of_deaths(0.5),
        delay=delay, within_deadline=within, pdr=pdr, psnr=psnr,
        copy_balance=log.copy_balance(), energy_balance=log.energy_balance(),
        energy_consumed=float(log.consumed.sum()),
        csv=log.to_csv(deadlines), trace_csv=log.to_csv(deadlines, verbose=True) if trace else None,
    )


def run_realization(config: ScenarioConfig, realization: int, protocols, trace: bool = False) -> list[RunResult]:
    """Run every protocol on one shared deployment, timeline and video feed."""
    dep: Deployment = deploy(config, realization)
    events = timeline(config, dep)
    feed = VideoFeed.for_deployment(config, dep)
    streams = {src: source_stream(feed, events, src) for src in sorted(dep.rush_ids)}
    deadlines = tuple(c.deadline for c in config.classes)
    out = []
    for v in protocols:
        v = Variant.parse(v) if isinstance(v, str) else v
        try:
            log = Simulation(config, dep, events, config.protocol_params(v), feed, trace=trace).run()
        except Exception as e:
            raise ExperimentError(f"realization {realization}, protocol {v.value}: {e}") from e
        out.append(reduce_run(log, deadlines, _score(log, streams, config, deadlines), trace))
    return out


def _mean_std(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    finite = a[~np.isnan(a)]
    if not len(finite):
        return math.nan, math.nan
    if np.isinf(finite).any():
        m = float(finite.mean())
        return m, (0.0 if np.all(finite == finite[0]) else math.nan)
    return float(finite.mean()), float(finite.std())


@dataclass
class ProtocolSummary:
    """Mean and (population) standard deviation over realizations."""
    protocol: str
    realizations: int
    alive_time: np.ndarray
    alive_mean: np.ndarray
    alive_std: np.ndarray
    delay: dict
    within_deadline: dict
    pdr: dict
    psnr_frames: np.ndarray
    psnr_times: np.ndarray
    psnr_modes: np.ndarray
    psnr_frame_mean: np.ndarray
    psnr_frame_std: np.ndarray
    psnr_mean: tuple[float, float]
    first_death: tuple[float, float]
    half_death: tuple[float, float]
    energy_consumed: tuple[float, float]


def summarize(runs: list[RunResult], alive_time: np.ndarray) -> ProtocolSummary:
    alive = np.array([r.alive(alive_time) for r in runs], dtype=float)
    with_psnr = [r.psnr for r in runs if r.psnr is not None]
    if with_psnr:
        vals = np.array([p.values for p in with_psnr])
        pf, pt, pm = with_psnr[0].frames, with_psnr[0].times, with_psnr[0].modes
        pmean, pstd = vals.mean(axis=0), vals.std(axis=0)
    else:
        pf = pt = pm = pmean = pstd = np.array([])
    return ProtocolSummary(
        protocol=runs[0].protocol, realizations=len(runs), alive_time=alive_time,
        alive_mean=alive.mean(axis=0), alive_std=alive.std(axis=0),
        delay={k: _mean_std([r.delay[k] for r in runs]) for k in KEYS},
        within_deadline={k: _mean_std([r.within_deadline[k] for r in runs]) for k in KEYS},
        pdr={k: _mean_std([r.pdr[k] for r in runs]) for k in KEYS},
        psnr_frames=pf, psnr_times=pt, psnr_modes=pm, psnr_frame_mean=pmean, psnr_frame_std=pstd,
        psnr_mean=_mean_std([r.psnr_mean for r in runs]),
        first_death=_mean_std([r.first_death for r in runs]),
        half_death=_mean_std([r.half_death for r in runs]),
        energy_consumed=_mean_std([r.energy_consumed for r in runs]),
    )


@dataclass
class Experiment:
    config: ScenarioConfig
    protocols: list[str]
    realizations: list[int]
    runs: dict = field(default_factory=dict)  # (protocol, realization) -> RunResult
    summaries: dict = field(default_factory=dict)  # protocol -> ProtocolSummary

    def paired(self, protocol: str) -> list[RunResult]:
        return [self.runs[protocol, r] for r in self.realizations]


def _job(args):
    config, r, protocols, trace = args
    return r, run_realization(config, r, protocols, trace)


def run_experiment(config: ScenarioConfig, protocols=None, realizations=None, workers: int = 1,
                   trace: bool = False, alive_step: float = 1.0, progress=None) -> Experiment:
    """Run paired realizations and aggregate them per protocol.

    ``realizations`` is a count or an iterable of indices (default: the
    config's count). With ``workers > 1`` realizations run in separate
    processes; results are merged in realization order either way.
    """
    protocols = [Variant.parse(p) if isinstance(p, str) else p for p in (protocols or list(Variant))]
    if realizations is None:
        realizations = config.realization_count
    idx = list(range(realizations)) if isinstance(realizations, int) else list(realizations)
    jobs = [(config, r, protocols, trace) for r in idx]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = dict(pool.map(_job, jobs))
    else:
        done = {}
        for job in jobs:
            r, res = _job(job)
            done[r] = res
            if progress is not None:
                progress(r, res)
    exp = Experiment(config, [p.value for p in protocols], idx)
    for r in idx:
        for res in done[r]:
            exp.runs[res.protocol, r] = res
    horizon = max((res.end_time for res in exp.runs.values()), default=0.0)
    t = np.arange(0.0, math.floor(horizon / alive_step) * alive_step + alive_step / 2, alive_step)
    for p in exp.protocols:
        exp.summaries[p] = summarize(exp.paired(p), t)
    return exp
