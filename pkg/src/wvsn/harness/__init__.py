"""Experiment driver: paired runs, aggregation, CSV and chart output."""
from .experiment import (
    Experiment, ExperimentError, ProtocolSummary, RunResult, reduce_run, run_experiment, run_realization,
    source_stream, summarize,
)
from .feed import VideoFeed
from .outputs import emit_outputs
from .scoring import PsnrSeries, SinkRecord, StreamFrame, reconstruct_and_score, sink_records

__all__ = [
    "Experiment", "ExperimentError", "ProtocolSummary", "RunResult", "reduce_run", "run_experiment",
    "run_realization", "source_stream", "summarize", "VideoFeed", "emit_outputs",
    "PsnrSeries", "SinkRecord", "StreamFrame", "reconstruct_and_score", "sink_records",
]
