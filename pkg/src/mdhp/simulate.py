"""Exact simulation of MDHP event sequences by thinning."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import MdhpError
from .hawkes import EventSequences, MdhpParams, compensator


class EventCapExceeded(MdhpError, RuntimeError):
    """The simulation produced more than ``max_events`` events."""


@dataclass(frozen=True)
class SimConfig:
    params: MdhpParams
    t_span: float
    seed: int = 0
    max_events: int = 1_000_000

    def __post_init__(self):
        if self.max_events < 1:
            raise ValueError("max_events must be >= 1")
        if not self.t_span > 0:
            raise ValueError("t_span must be > 0")


def simulate_mdhp(cfg: SimConfig) -> EventSequences:
    """Draw one realization on ``[0, cfg.t_span]``.

    Between events every intensity decays, so the total intensity just after
    the current time bounds the total on the next gap. Candidates are drawn
    at that rate and accepted with probability ``sum(lambda) / bound``; the
    same uniform picks the dimension proportionally to ``lambda_i``.
    """
    p = cfg.params
    if p.branching_radius() >= 1:
        warnings.warn(
            f"branching radius {p.branching_radius():.3f} >= 1: process is not stationary",
            RuntimeWarning,
        )
    rng = np.random.default_rng(cfg.seed)
    D = p.dims
    alpha, beta, theta = p.alpha, p.beta, p.theta
    # decayed[i, j] = sum_k exp(-beta[i, j] * (t - T_j^k)) over events so far
    decayed = np.zeros((D, D))
    times: list[list[float]] = [[] for _ in range(D)]
    t = 0.0
    n = 0
    lam = theta.copy()
    bound = float(lam.sum())
    while bound > 0:
        t_new = t + rng.exponential(1.0 / bound)
        if t_new > cfg.t_span:
            break
        decayed *= np.exp(-beta * (t_new - t))
        t = t_new
        lam = theta + (alpha * decayed).sum(axis=1)
        total = float(lam.sum())
        u = rng.uniform(0.0, bound)
        if u < total:
            i = min(int(np.searchsorted(np.cumsum(lam), u, side="right")), D - 1)
            times[i].append(t)
            n += 1
            if n > cfg.max_events:
                raise EventCapExceeded(
                    f"more than {cfg.max_events} events; parameters likely unstable"
                )
            decayed[:, i] += 1.0
            lam = lam + alpha[:, i]
            bound = float(lam.sum())
        else:
            bound = total
    return EventSequences(tuple(np.array(ts) for ts in times), cfg.t_span)


def time_rescaled_gaps(params: MdhpParams, events: EventSequences) -> np.ndarray:
    """Compensator increments between consecutive events of each dimension.

    Under the true parameters these are i.i.d. Exponential(1).
    """
    out = []
    for i, ts in enumerate(events.times):
        if ts.size == 0:
            continue
        lam_int = compensator(params, events, i, ts)
        out.append(np.diff(np.concatenate(([0.0], lam_int))))
    return np.concatenate(out) if out else np.zeros(0)
