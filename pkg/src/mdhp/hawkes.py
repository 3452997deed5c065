"""Multi-dimensional Hawkes process with exponential excitation kernels.

The intensity of dimension ``i`` is::

    lambda_i(t) = theta_i + sum_j sum_{k: T_j^k < t} alpha[i, j] * exp(-beta[i, j] * (t - T_j^k))

and the log-likelihood of a window observed on ``[0, t_span]`` splits into
three parts: the sum of log-intensities at the events (Part1), the baseline
compensator ``-t_span * sum(theta)`` (Part2) and the excitation compensator
``sum_ij alpha_ij / beta_ij * sum_k (exp(-beta_ij (t_span - T_j^k)) - 1)``
(Part3).

Two evaluation routes are provided: :func:`log_likelihood_naive` walks the
events with plain loops and is kept as the correctness oracle, while
:func:`log_likelihood` works on the rectangularized :class:`PaddedEvents`
built once per window by :func:`pad_and_stack`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, NumericalError

EXP_CLAMP = 80.0
LOG_FLOOR = 1e-300


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EventSequences:
    """Per-dimension ascending timestamps observed on ``[0, t_span]``.

    Input lists are sorted on construction; coincident timestamps inside one
    dimension are pushed apart by one ulp so every list is strictly
    ascending. Ties across dimensions are left alone.
    """

    times: tuple
    t_span: float

    def __post_init__(self):
        t_span = float(self.t_span)
        if not np.isfinite(t_span) or t_span < 0:
            raise ValueError(f"t_span must be finite and >= 0, got {self.t_span}")
        if len(self.times) < 1:
            raise ValueError("need at least one dimension")
        cleaned = []
        for i, ts in enumerate(self.times):
            arr = np.sort(np.asarray(ts, dtype=np.float64).ravel())
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError(f"dimension {i} holds non-finite timestamps")
            if arr.size > 1 and np.any(np.diff(arr) <= 0):
                arr = arr.copy()
                for k in range(1, arr.size):
                    if arr[k] <= arr[k - 1]:
                        arr[k] = np.nextafter(arr[k - 1], np.inf)
            if arr.size and (arr[0] < 0 or arr[-1] > t_span):
                raise ValueError(
                    f"dimension {i} has timestamps outside [0, {t_span}]"
                )
            cleaned.append(_frozen(arr))
        object.__setattr__(self, "times", tuple(cleaned))
        object.__setattr__(self, "t_span", t_span)

    @property
    def dims(self) -> int:
        return len(self.times)

    @property
    def counts(self) -> np.ndarray:
        return np.array([ts.size for ts in self.times], dtype=np.int64)

    @property
    def n_events(self) -> int:
        return int(sum(ts.size for ts in self.times))


@dataclass(frozen=True)
class MdhpParams:
    """Excitation matrix ``alpha``, decay matrix ``beta`` and baseline ``theta``.

    ``alpha`` must be non-negative, ``beta`` strictly positive and ``theta``
    non-negative. A zero baseline is allowed here (it is meaningful for
    simulation); the solver keeps ``theta`` above its projection floor.
    """

    alpha: np.ndarray
    beta: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=np.float64)
        beta = np.array(self.beta, dtype=np.float64)
        theta = np.array(self.theta, dtype=np.float64).ravel()
        d = theta.size
        if d < 1:
            raise DimensionMismatchError("theta must have at least one entry")
        if alpha.shape != (d, d) or beta.shape != (d, d):
            raise DimensionMismatchError(
                f"alpha {alpha.shape} and beta {beta.shape} must be ({d}, {d})"
            )
        if np.any(alpha < 0):
            raise ValueError("alpha entries must be >= 0")
        if np.any(beta <= 0):
            raise ValueError("beta entries must be > 0")
        if np.any(theta < 0):
            raise ValueError("theta entries must be >= 0")
        object.__setattr__(self, "alpha", _frozen(alpha))
        object.__setattr__(self, "beta", _frozen(beta))
        object.__setattr__(self, "theta", _frozen(theta))

    @property
    def dims(self) -> int:
        return self.theta.size

    @classmethod
    def uniform(cls, dims: int, alpha: float, beta: float, theta: float) -> "MdhpParams":
        return cls(
            np.full((dims, dims), alpha),
            np.full((dims, dims), beta),
            np.full(dims, theta),
        )

    def branching_radius(self) -> float:
        """Spectral radius of ``alpha / beta``; below 1 means stationary."""
        return float(np.max(np.abs(np.linalg.eigvals(self.alpha / self.beta))))


def _check_dims(params: MdhpParams, dims: int) -> None:
    if params.dims != dims:
        raise DimensionMismatchError(
            f"params have {params.dims} dimensions, events have {dims}"
        )


def intensity_at(params: MdhpParams, events: EventSequences, i: int, t: float) -> float:
    """Conditional intensity of dimension ``i`` at time ``t``.

    Only events strictly before ``t`` contribute.
    """
    _check_dims(params, events.dims)
    if not 0 <= i < events.dims:
        raise IndexError(f"dimension {i} out of range for D={events.dims}")
    lam = params.theta[i]
    for j, ts in enumerate(events.times):
        past = ts[ts < t]
        if past.size:
            lam += params.alpha[i, j] * np.exp(-params.beta[i, j] * (t - past)).sum()
    return float(lam)


def compensator(params: MdhpParams, events: EventSequences, i: int, t) -> np.ndarray:
    """Integrated intensity ``int_0^t lambda_i(v) dv`` for each query time."""
    _check_dims(params, events.dims)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = params.theta[i] * t
    for j, ts in enumerate(events.times):
        if not ts.size:
            continue
        a, b = params.alpha[i, j], params.beta[i, j]
        gap = t[:, None] - ts[None, :]
        contrib = np.where(gap > 0, -np.expm1(-b * np.clip(gap, 0, None)), 0.0)
        out = out + (a / b) * contrib.sum(axis=1)
    return out


def log_likelihood_naive(params: MdhpParams, events: EventSequences) -> float:
    """Log-likelihood by direct nested loops; the reference implementation.

    No clamping or flooring is applied. A zero or non-finite intensity at an
    event raises :class:`NumericalError` instead of being patched over.
    """
    _check_dims(params, events.dims)
    alpha, beta, theta = params.alpha, params.beta, params.theta
    D = events.dims
    T = events.t_span
    part1 = 0.0
    for i in range(D):
        for t in events.times[i]:
            lam = float(theta[i])
            for j in range(D):
                for s in events.times[j]:
                    if s < t:
                        lam += alpha[i, j] * math.exp(-beta[i, j] * (t - s))
            if not (lam > 0 and math.isfinite(lam)):
                raise NumericalError(f"intensity {lam!r} at event t={t} in dim {i}")
            part1 += math.log(lam)
    gamma = 0.0
    for i in range(D):
        gamma += T * theta[i]
        for j in range(D):
            for s in events.times[j]:
                gamma += alpha[i, j] / beta[i, j] * (1.0 - math.exp(-beta[i, j] * (T - s)))
    result = part1 - gamma
    if not math.isfinite(result):
        raise NumericalError(f"non-finite log-likelihood {result!r}")
    return result


def gamma_closed_form(params: MdhpParams, events: EventSequences) -> float:
    """Compensator ``sum_i int_0^T lambda_i(v) dv`` in closed form."""
    _check_dims(params, events.dims)
    T = events.t_span
    total = T * float(params.theta.sum())
    for j, ts in enumerate(events.times):
        if not ts.size:
            continue
        # column j: every target i sees the same source events
        decay = np.exp(-params.beta[:, j, None] * (T - ts[None, :])) - 1.0
        total -= float(np.sum(params.alpha[:, j] / params.beta[:, j] * decay.sum(axis=1)))
    return total


@dataclass(frozen=True)
class PaddedEvents:
    """Rectangularized events plus the precomputed pairwise differences.

    ``tmpt[i, a, j, b] = padded[i, a] - padded[j, b]`` and ``pair_mask`` marks
    the entries where both slots are real events and the difference is
    strictly positive. ``pair_tau`` holds the masked entries of ``tmpt`` in
    row-major order, so each (target event, source dimension) run is
    contiguous; ``seg_*`` describe those runs. The per-epoch work then only
    touches contributing pairs.
    """

    padded: np.ndarray
    mask: np.ndarray
    tmpt: np.ndarray
    pair_mask: np.ndarray
    t_span: float
    pair_tau: np.ndarray = field(repr=False)
    seg_start: np.ndarray = field(repr=False)
    seg_len: np.ndarray = field(repr=False)
    seg_row: np.ndarray = field(repr=False)
    seg_block: np.ndarray = field(repr=False)

    @property
    def dims(self) -> int:
        return self.padded.shape[0]

    @property
    def max_len(self) -> int:
        return self.padded.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.mask.sum())


def pad_and_stack(events: EventSequences) -> PaddedEvents:
    """Pad every dimension to the longest one and precompute ``t - T``.

    Padding slots hold ``t_span`` so that their compensator terms vanish.
    """
    D = events.dims
    counts = events.counts
    L = max(int(counts.max()), 1)
    padded = np.full((D, L), events.t_span, dtype=np.float64)
    mask = np.zeros((D, L), dtype=bool)
    for i, ts in enumerate(events.times):
        padded[i, : ts.size] = ts
        mask[i, : ts.size] = True
    tmpt = padded[:, :, None, None] - padded[None, None, :, :]
    pair_mask = mask[:, :, None, None] & mask[None, None, :, :] & (tmpt > 0)
    # runs of equal (i, a, j) in row-major order
    seg_counts = pair_mask.sum(axis=3).ravel()
    nz = np.flatnonzero(seg_counts)
    seg_len = seg_counts[nz]
    seg_start = np.concatenate(([0], np.cumsum(seg_len)[:-1])).astype(np.int64)
    i_idx, a_idx, j_idx = np.unravel_index(nz, (D, L, D))
    return PaddedEvents(
        padded=_frozen(padded),
        mask=_frozen(mask),
        tmpt=_frozen(tmpt),
        pair_mask=_frozen(pair_mask),
        t_span=float(events.t_span),
        pair_tau=_frozen(tmpt[pair_mask]),
        seg_start=_frozen(seg_start),
        seg_len=_frozen(seg_len),
        seg_row=_frozen(i_idx * L + a_idx),
        seg_block=_frozen(i_idx * D + j_idx),
    )


def _check_padded(params: MdhpParams, pe: PaddedEvents, t_span: float) -> None:
    _check_dims(params, pe.dims)
    if not np.isclose(t_span, pe.t_span, rtol=0, atol=1e-12 * max(1.0, abs(pe.t_span))):
        raise ValueError(
            f"t_span {t_span} differs from the padding value {pe.t_span}"
        )


def _part1_terms(params: MdhpParams, pe: PaddedEvents, with_tau: bool = False):
    """Per-event intensities; optionally the per-run sums needed for d/d beta."""
    D, L = pe.dims, pe.max_len
    if pe.pair_tau.size == 0:
        lam = np.broadcast_to(params.theta[:, None], (D, L)).copy()
        empty = np.zeros(0)
        return lam, empty, empty
    b = np.repeat(params.beta.ravel()[pe.seg_block], pe.seg_len)
    arg = np.multiply(b, pe.pair_tau, out=b)
    np.negative(arg, out=arg)
    np.minimum(arg, EXP_CLAMP, out=arg)
    open_ = arg < EXP_CLAMP if with_tau else None
    e = np.exp(arg, out=arg)
    E = np.add.reduceat(e, pe.seg_start)
    S = np.bincount(pe.seg_row, params.alpha.ravel()[pe.seg_block] * E, minlength=D * L)
    lam = params.theta[:, None] + S.reshape(D, L)
    if not with_tau:
        return lam, E, None
    te = np.multiply(e, pe.pair_tau, out=e)
    if not open_.all():
        te[~open_] = 0.0
    TE = np.add.reduceat(te, pe.seg_start)
    return lam, E, TE


def _part3_terms(params: MdhpParams, pe: PaddedEvents, t_span: float):
    remain = t_span - pe.padded  # (D_j, L); zero at padding slots
    arg = np.minimum(-params.beta[:, :, None] * remain[None, :, :], EXP_CLAMP)
    e = np.exp(arg)  # (D_i, D_j, L)
    return remain, arg, e


def log_likelihood(params: MdhpParams, pe: PaddedEvents, t_span: float) -> float:
    """Log-likelihood from padded events (Part1 + Part2 + Part3).

    Exponent arguments are clamped at +80 before exponentiation; the
    argument of each logarithm is floored at 1e-300. NaN parameters give a
    NaN result rather than an exception, so an optimizer can detect it.
    """
    _check_padded(params, pe, t_span)
    lam, _, _ = _part1_terms(params, pe)
    part1 = float(np.log(np.maximum(lam[pe.mask], LOG_FLOOR)).sum())
    part2 = -t_span * float(params.theta.sum())
    _, _, e3 = _part3_terms(params, pe, t_span)
    part3 = float(np.sum(params.alpha / params.beta * (e3 - 1.0).sum(axis=2)))
    return part1 + part2 + part3


def log_likelihood_parts(params: MdhpParams, pe: PaddedEvents, t_span: float):
    """``(part1, part2, part3)`` separately; see :func:`log_likelihood`."""
    _check_padded(params, pe, t_span)
    lam, _, _ = _part1_terms(params, pe)
    part1 = float(np.log(np.maximum(lam[pe.mask], LOG_FLOOR)).sum())
    part2 = -t_span * float(params.theta.sum())
    _, _, e3 = _part3_terms(params, pe, t_span)
    part3 = float(np.sum(params.alpha / params.beta * (e3 - 1.0).sum(axis=2)))
    return part1, part2, part3


def part1_dense(params: MdhpParams, pe: PaddedEvents) -> float:
    """Part1 straight from the full 4-D ``tmpt`` tensor with ``pair_mask``.

    Same value as the compressed path used by :func:`log_likelihood`, at
    ``O((D * maxTimeLen)^2)`` memory per call.
    """
    _check_dims(params, pe.dims)
    D = pe.dims
    a = params.alpha.reshape(D, 1, D, 1)
    b = params.beta.reshape(D, 1, D, 1)
    aexp = np.where(pe.pair_mask, a * np.exp(np.minimum(-b * pe.tmpt, EXP_CLAMP)), 0.0)
    S = aexp.sum(axis=(2, 3))
    lam = params.theta[:, None] + S
    return float(np.log(np.maximum(lam[pe.mask], LOG_FLOOR)).sum())


def log_likelihood_and_grad(params: MdhpParams, pe: PaddedEvents, t_span: float):
    """Log-likelihood together with its gradient, sharing the exponentials.

    Returns ``(lnl, d_alpha, d_beta, d_theta)``.
    """
    _check_padded(params, pe, t_span)
    D, L = pe.dims, pe.max_len
    alpha, beta, theta = params.alpha, params.beta, params.theta

    lam, E, TE = _part1_terms(params, pe, with_tau=True)
    valid = pe.mask & (lam > LOG_FLOOR)
    part1 = float(np.log(np.maximum(lam[pe.mask], LOG_FLOOR)).sum())
    inv = np.where(valid, 1.0 / np.where(valid, lam, 1.0), 0.0).ravel()

    w = inv[pe.seg_row]
    d_alpha = np.bincount(pe.seg_block, w * E, minlength=D * D).reshape(D, D)
    d_beta = -np.bincount(pe.seg_block, w * TE, minlength=D * D).reshape(D, D) * alpha
    d_theta = inv.reshape(D, L).sum(axis=1) - t_span

    remain, arg3, e3 = _part3_terms(params, pe, t_span)
    K = (e3 - 1.0).sum(axis=2)
    part3 = float(np.sum(alpha / beta * K))
    d_alpha = d_alpha + K / beta
    dK_dbeta = -np.where(arg3 < EXP_CLAMP, remain[None, :, :] * e3, 0.0).sum(axis=2)
    d_beta = d_beta - alpha / beta**2 * K + alpha / beta * dK_dbeta

    lnl = part1 - t_span * float(theta.sum()) + part3
    return lnl, d_alpha, d_beta, d_theta


def grad_log_likelihood(params: MdhpParams, pe: PaddedEvents, t_span: float):
    """Analytic ``(d_alpha, d_beta, d_theta)`` of :func:`log_likelihood`."""
    _, d_alpha, d_beta, d_theta = log_likelihood_and_grad(params, pe, t_span)
    return d_alpha, d_beta, d_theta
