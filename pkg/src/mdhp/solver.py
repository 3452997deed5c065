"""Gradient-based maximum-likelihood estimation of MDHP parameters.

Workflow per window: standardize timestamps into ``[Min, Max]``, pad and
precompute pairwise differences once, then run projected gradient ascent on
the log-likelihood until it stops improving.
"""

from __future__ import annotations

import json
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DatasetError,
    DegenerateWindowError,
    DimensionMismatchError,
    NumericalError,
)
from .hawkes import EventSequences, MdhpParams, log_likelihood_and_grad, pad_and_stack
from .optim import AdamW, GradientDescent

log = logging.getLogger(__name__)

MAX_STEP_HALVINGS = 30


@dataclass(frozen=True)
class SolverConfig:
    max_epochs: int = 300
    learning_rate: float = 0.05
    optimizer: str = "adaptive-moment"
    init_alpha: float = 0.5
    init_beta: float = 1.0
    init_theta: float = 0.1
    min_param: float = 1e-4
    tol_rel: float = 1e-6
    patience: int = 10
    standardize: bool = True
    standardize_min: float = 0.0
    standardize_max: float = 1.0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.min_param <= 0:
            raise ConfigError("min_param must be > 0")
        if self.standardize_max <= self.standardize_min:
            raise ConfigError("standardize_max must exceed standardize_min")
        if self.optimizer not in ("plain-gd", "adaptive-moment"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if min(self.init_alpha, self.init_beta, self.init_theta) <= 0:
            raise ConfigError("initial parameter values must be > 0")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown solver options: {sorted(unknown)}")
        return cls(**d)


@dataclass
class EstimationResult:
    params: MdhpParams
    final_lnl: float
    epochs_run: int
    lnl_trace: list
    wall_seconds: float
    n_events: int = 0


def _is_degenerate(events: EventSequences) -> bool:
    nonempty = [ts for ts in events.times if ts.size]
    if not nonempty:
        return False
    lo = min(ts[0] for ts in nonempty)
    hi = max(ts[-1] for ts in nonempty)
    return lo == hi


def standardize(events: EventSequences, min: float = 0.0, max: float = 1.0) -> EventSequences:
    """Affinely map all timestamps into ``[min, max]`` using the joint range.

    The returned window has ``t_span = max``. If every timestamp is the same
    the range is degenerate: all events are mapped to ``min`` and a warning
    is emitted.
    """
    lo_t, hi_t = min, max
    if hi_t <= lo_t:
        raise ValueError("max must exceed min")
    nonempty = [ts for ts in events.times if ts.size]
    if not nonempty:
        raise ValueError("cannot standardize a window without timestamps")
    t_lo = float(np.min([ts[0] for ts in nonempty]))
    t_hi = float(np.max([ts[-1] for ts in nonempty]))
    if t_hi == t_lo:
        warnings.warn("degenerate time range: all timestamps identical", RuntimeWarning)
        out = [np.full(ts.size, lo_t) for ts in events.times]
    else:
        scale = (hi_t - lo_t) / (t_hi - t_lo)
        out = [np.clip((ts - t_lo) * scale + lo_t, lo_t, hi_t) for ts in events.times]
    return EventSequences(tuple(out), hi_t)


def _make_optimizer(cfg: SolverConfig):
    if cfg.optimizer == "plain-gd":
        return GradientDescent(cfg.learning_rate)
    return AdamW(cfg.learning_rate, weight_decay=0.0)


def _project(p: dict, floor: float) -> dict:
    return {
        "alpha": np.maximum(p["alpha"], 0.0),
        "beta": np.maximum(p["beta"], floor),
        "theta": np.maximum(p["theta"], floor),
    }


def estimate(events: EventSequences, cfg: SolverConfig | None = None) -> EstimationResult:
    """Fit MDHP parameters to one window by projected gradient ascent.

    The returned parameters are the best iterate seen, so ``final_lnl`` is
    never below the starting log-likelihood ``lnl_trace[0]``.

    Raises
    ------
    DegenerateWindowError
        Standardization was requested but all timestamps coincide.
    NumericalError
        The log-likelihood stays non-finite after repeated step halving.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    if cfg.standardize and events.n_events:
        if _is_degenerate(events):
            standardize(events, cfg.standardize_min, cfg.standardize_max)
            raise DegenerateWindowError("all timestamps in the window are identical")
        events = standardize(events, cfg.standardize_min, cfg.standardize_max)
    pe = pad_and_stack(events)
    t_span = events.t_span
    if t_span <= 0:
        raise DegenerateWindowError("observation window has zero length")
    D = events.dims

    p = {
        "alpha": np.full((D, D), cfg.init_alpha),
        "beta": np.full((D, D), cfg.init_beta),
        "theta": np.full(D, cfg.init_theta),
    }

    def evaluate(q):
        lnl, da, db, dt = log_likelihood_and_grad(
            MdhpParams(q["alpha"], q["beta"], q["theta"]), pe, t_span
        )
        return lnl, {"alpha": -da, "beta": -db, "theta": -dt}

    opt = _make_optimizer(cfg)
    lnl, grads = evaluate(p)
    if not math.isfinite(lnl):
        raise NumericalError(f"non-finite log-likelihood {lnl} at the initial point")
    trace = [lnl]
    best_lnl, best_p = lnl, p
    stall = 0
    epochs = 0
    for epochs in range(1, cfg.max_epochs + 1):
        snapshot = opt.state_dict()
        for _ in range(MAX_STEP_HALVINGS):
            cand = _project(opt.step(p, grads), cfg.min_param)
            new_lnl, new_grads = evaluate(cand)
            if math.isfinite(new_lnl) and all(np.all(np.isfinite(g)) for g in new_grads.values()):
                break
            opt.load_state_dict(snapshot)
            opt.lr *= 0.5
            log.debug("non-finite step at epoch %d, lr -> %g", epochs, opt.lr)
        else:
            raise NumericalError(
                f"log-likelihood stayed non-finite after {MAX_STEP_HALVINGS} halvings"
            )
        rel = (new_lnl - lnl) / max(1.0, abs(lnl))
        p, lnl, grads = cand, new_lnl, new_grads
        trace.append(lnl)
        if lnl > best_lnl:
            best_lnl, best_p = lnl, p
        stall = stall + 1 if rel < cfg.tol_rel else 0
        if stall >= cfg.patience:
            break

    assert best_lnl >= trace[0]
    return EstimationResult(
        params=MdhpParams(best_p["alpha"], best_p["beta"], best_p["theta"]),
        final_lnl=best_lnl,
        epochs_run=epochs,
        lnl_trace=trace,
        wall_seconds=time.perf_counter() - start,
        n_events=events.n_events,
    )


def rescale_params(params: MdhpParams, time_scale: float) -> MdhpParams:
    """Express parameters fitted on time ``s * t`` in the original time unit.

    An intensity on stretched time ``t' = s t`` has ``theta' = theta / s``,
    ``alpha' = alpha / s`` and ``beta' = beta / s``; this inverts that.
    """
    s = float(time_scale)
    return MdhpParams(params.alpha * s, params.beta * s, params.theta * s)


@dataclass
class BatchReport:
    """Throughput summary in the column layout of the speed tables."""

    dims: int
    max_t_len: int
    min_t_len: int
    window_cost: float
    throughput: float
    n_windows: int
    n_failed: int = 0
    failures: list = field(default_factory=list)

    COLUMNS = ("Dim", "Max-T-Len", "Min-T-Len", "Window-Cost", "Throughput")

    def row(self) -> tuple:
        return (self.dims, self.max_t_len, self.min_t_len,
                round(self.window_cost, 4), round(self.throughput, 4))

    def as_dict(self) -> dict:
        return dict(zip(self.COLUMNS, self.row()))


def format_report_table(reports: Iterable[BatchReport]) -> str:
    lines = [",".join(BatchReport.COLUMNS)]
    for r in reports:
        lines.append(",".join(str(v) for v in r.row()))
    return "\n".join(lines) + "\n"


def batch_estimate(windows: Sequence[EventSequences], cfg: SolverConfig | None = None,
                   workers: int = 1):
    """Estimate every window independently.

    Returns ``(results, report)``; ``results[k]`` is ``None`` when window
    ``k`` failed, and the failure is listed in ``report.failures``. Results
    keep input order regardless of worker scheduling.
    """
    cfg = cfg or SolverConfig()
    windows = list(windows)
    if windows:
        dims = {w.dims for w in windows}
        if len(dims) != 1:
            raise DimensionMismatchError(f"windows disagree on dims: {sorted(dims)}")

    def run(k):
        try:
            return estimate(windows[k], cfg), None
        except (NumericalError, DegenerateWindowError, ValueError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    start = time.perf_counter()
    if workers > 1 and len(windows) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, range(len(windows))))
    else:
        outcomes = [run(k) for k in range(len(windows))]
    elapsed = time.perf_counter() - start

    results = [r for r, _ in outcomes]
    failures = [(k, msg) for k, (_, msg) in enumerate(outcomes) if msg is not None]
    lens = [int(c) for w in windows for c in w.counts]
    n_msgs = sum(w.n_events for w in windows)
    report = BatchReport(
        dims=windows[0].dims if windows else 0,
        max_t_len=max(lens) if lens else 0,
        min_t_len=min(lens) if lens else 0,
        window_cost=elapsed / len(windows) if windows else 0.0,
        throughput=n_msgs / elapsed if windows and elapsed > 0 else 0.0,
        n_windows=len(windows),
        n_failed=len(failures),
        failures=failures,
    )
    return results, report


DUMP_FIELDS = ("window_id", "dims", "alpha", "beta", "theta", "final_lnl",
               "epochs_run", "wall_seconds")


def dump_record(window_id, result: EstimationResult, **extra) -> dict:
    p = result.params
    rec = {
        "window_id": window_id,
        "dims": p.dims,
        "alpha": p.alpha.ravel().tolist(),
        "beta": p.beta.ravel().tolist(),
        "theta": p.theta.tolist(),
        "final_lnl": result.final_lnl,
        "epochs_run": result.epochs_run,
        "wall_seconds": result.wall_seconds,
    }
    rec.update(extra)
    return rec


def write_dump(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_dump(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            missing = [f for f in DUMP_FIELDS if f not in rec]
            if missing:
                raise DatasetError(f"{path}:{n}: dump record missing {missing}")
            out.append(rec)
    return out


def record_params(rec: dict) -> MdhpParams:
    d = rec["dims"]
    return MdhpParams(
        np.reshape(rec["alpha"], (d, d)), np.reshape(rec["beta"], (d, d)), rec["theta"]
    )
