"""Glue between traffic windows, MDHP estimation and the classifier."""

from __future__ import annotations

import numpy as np

from ._rng import derive_rng
from .lstm import Dataset, HawkesFeatures
from .solver import SolverConfig, batch_estimate, record_params
from .traffic import gen_toy_window


def window_features(windows, dims: int, cfg: SolverConfig | None = None, workers: int = 1):
    """Fit each window and return ``(HawkesFeatures list, results, report)``.

    ``beta`` is fitted on standardized time and multiplied by the window's
    raw duration, so the gate sees the time scale removed by standardizing.
    Windows whose fit fails get all-zero features.
    """
    events = [w.to_events(dims) for w in windows]
    results, report = batch_estimate(events, cfg, workers)
    feats = []
    for ev, r in zip(events, results):
        if r is None:
            z = np.zeros(dims * dims)
            feats.append(HawkesFeatures(z, z, np.zeros(dims)))
        else:
            feats.append(HawkesFeatures.from_params(r.params, ev.t_span))
    return feats, results, report


def features_from_record(rec: dict) -> HawkesFeatures:
    return HawkesFeatures.from_params(record_params(rec), float(rec["t_span"]))


def toy_dataset(n_per_class: int, dims: int = 3, seed: int = 0, rate_ratio: float = 10.0,
                cfg: SolverConfig | None = None, shuffle_labels: bool = False) -> Dataset:
    """Balanced separable dataset with fitted Hawkes features.

    With ``shuffle_labels`` the labels are permuted after generation, which
    breaks any link between inputs and targets.
    """
    cfg = cfg or SolverConfig(max_epochs=60)
    windows = []
    for k in range(n_per_class):
        windows.append(gen_toy_window(dims, "normal", derive_rng(seed, "toy", 0, k), rate_ratio))
        windows.append(gen_toy_window(dims, "attack", derive_rng(seed, "toy", 1, k), rate_ratio))
    feats, _, _ = window_features(windows, dims, cfg)
    data = Dataset.from_windows(windows, feats)
    if shuffle_labels:
        data.y = derive_rng(seed, "toy-shuffle").permutation(data.y)
    return data
