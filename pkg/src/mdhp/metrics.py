"""Empirical CDFs, two-sample KS and binary classification metrics."""

from __future__ import annotations

import numpy as np

from .errors import SingleClassError


def ecdf(values):
    """Sorted unique values and the cumulative fraction at each."""
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if x.size == 0:
        return x, x
    uniq, idx = np.unique(x, return_index=True)
    counts = np.diff(np.append(idx, x.size))
    return uniq, np.cumsum(counts) / x.size


def ks_statistic(a, b) -> float:
    """Largest vertical gap between the empirical CDFs of ``a`` and ``b``."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def confusion(y_true, y_pred) -> dict:
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    return {
        "tp": int(np.sum(y_true & y_pred)),
        "fp": int(np.sum(~y_true & y_pred)),
        "tn": int(np.sum(~y_true & ~y_pred)),
        "fn": int(np.sum(y_true & ~y_pred)),
    }


def binary_metrics(y_true, y_pred) -> dict:
    """Accuracy, precision, recall and F1 with label 1 as positive.

    Precision (or recall) is 0 when its denominator is empty.
    """
    c = confusion(y_true, y_pred)
    n = sum(c.values())
    if n == 0:
        raise ValueError("no samples")
    tp, fp, fn = c["tp"], c["fp"], c["fn"]
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": (tp + c["tn"]) / n,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        **c,
    }


def roc_curve(y_true, scores):
    """ROC points from sweeping a threshold over ``scores``.

    Returns ``(fpr, tpr, thresholds)`` starting at ``(0, 0)``; tied scores
    move both rates in one step.
    """
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC needs both classes present")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tps = np.cumsum(y)[last]
    fps = (last + 1) - tps
    fpr = np.r_[0.0, fps / n_neg]
    tpr = np.r_[0.0, tps / n_pos]
    thr = np.r_[np.inf, s[last]]
    return fpr, tpr, thr


def auc(fpr, tpr) -> float:
    return float(np.trapezoid(tpr, fpr)) if hasattr(np, "trapezoid") else float(np.trapz(tpr, fpr))
