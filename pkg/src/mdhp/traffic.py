"""SOME/IP-like traffic windows and time-exciting injection attacks.

Benign traffic comes from jittered periodic per-ECU schedules. Attacks are
described by an :class:`AttackScenario`: a rate function ``g(t)`` on the
normalized window time ``t in [0, 1]``, an IP-control function ``f(t)``
giving how many source IPs the attacker holds, and a sampler (NPP, ND or
DRP) that turns ``g`` into injection times by thinning.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._rng import derive_rng
from .errors import DatasetError
from .hawkes import EventSequences

WINDOW_LEN = 128
SPAN_WINDOWS = 3
CANDIDATE_RATE = 512.0

RATE_STRATEGIES = ("PLA", "DEA", "ASA", "DAM")
SAMPLERS = ("NPP", "ND", "DRP")

# SOME/IP message types
REQUEST = 0x00
REQUEST_NO_RETURN = 0x01
NOTIFICATION = 0x02

FIELD_BITS = {
    "service_id": 16,
    "method_id": 16,
    "length": 32,
    "client_id": 16,
    "session_id": 16,
    "protocol_version": 8,
    "interface_version": 8,
    "message_type": 8,
    "return_code": 8,
    "src_ip_index": 8,
}
FIELDS = tuple(FIELD_BITS)


# --------------------------------------------------------------------------
# rate and IP-control functions

def pla_rate(t, a, b):
    return a * np.power(t, b)


def dea_rate(t, W1, W2, alpha1, alpha2, gamma, t1):
    t = np.asarray(t, dtype=np.float64)
    early = W1 * alpha1 * np.power(np.where(t < t1, t, 1.0), alpha1 - 1)
    late = W2 * alpha2 * np.exp(gamma * (t - t1))
    return np.where(t < t1, early, late)


def asa_rate(t, C, gamma, t0):
    # numerator exp(gamma * t) as printed, not exp(gamma * (t - t0))
    return C * np.exp(gamma * t) / (1.0 + np.exp(gamma * (t - t0))) ** 2


def dam_rate(t, w, alpha1, alpha2):
    return w * alpha1 * np.power(t, alpha1 - 1) + (1.0 - w) * alpha2 * np.exp(alpha2 * t)


def pla_ip(t, a, b):
    return (a / (b + 1.0)) * np.power(t, b + 1.0)


def dea_ip(t, n_base, k1, k2, mu, t1):
    t = np.asarray(t, dtype=np.float64)
    return np.where(
        t < t1,
        n_base + k1 * t,
        n_base + k1 * t1 + k2 * (np.exp(mu * (t - t1)) - 1.0),
    )


def asa_ip(t, n_max, gamma, t0):
    return n_max / (1.0 + np.exp(-gamma * (t - t0)))


def dam_ip(t, n_base, n_max, alpha, beta, gamma, time_dependent=False):
    t = np.asarray(t, dtype=np.float64)
    burst = np.exp(beta * t) if time_dependent else np.exp(beta) * np.ones_like(t)
    return n_base + (n_max - n_base) * (alpha * burst + (1.0 - alpha) * (1.0 - np.exp(-gamma * t)))


RATE_FUNCS = {"PLA": pla_rate, "DEA": dea_rate, "ASA": asa_rate, "DAM": dam_rate}
IP_FUNCS = {"PLA": pla_ip, "DEA": dea_ip, "ASA": asa_ip, "DAM": dam_ip}
# left-limit breakpoints where a piecewise rate may peak without attaining it
_RATE_BREAKS = {"DEA": "t1"}

DEFAULT_RATE_PARAMS = {
    "PLA": {"a": 2.0, "b": 1.0},
    "DEA": {"W1": 1.0, "W2": 1.0, "alpha1": 2.0, "alpha2": 1.2, "gamma": 3.0, "t1": 0.6},
    "ASA": {"C": 1.0, "gamma": 8.0, "t0": 0.5},
    "DAM": {"w": 0.5, "alpha1": 3.0, "alpha2": 4.0},
}


def default_ip_params(strategy: str, n_ips: int) -> dict:
    n = float(n_ips)
    return {
        "PLA": {"a": 2.0 * n, "b": 1.0},
        "DEA": {"n_base": 1.0, "k1": 1.0, "k2": max(n - 2.0, 1.0) / 2.0, "mu": 3.0, "t1": 0.6},
        "ASA": {"n_max": n, "gamma": 8.0, "t0": 0.5},
        "DAM": {"n_base": 1.0, "n_max": n, "alpha": 0.2, "beta": 0.5, "gamma": 5.0},
    }[strategy]


@dataclass(frozen=True)
class AttackScenario:
    """Everything needed to inject one family of time-exciting attacks.

    ``rate_strategy`` is ``None`` for the DRP sampler, which draws its own
    random mixed rate. ``dam_ip_time_dependent`` switches the DAM IP-control
    burst term from the constant ``alpha * e^beta`` to ``alpha * e^(beta t)``.
    """

    rate_strategy: str | None
    rate_params: dict
    ip_strategy: str
    ip_params: dict
    sampler: str
    seed: int = 0
    dam_ip_time_dependent: bool = False

    def __post_init__(self):
        if self.rate_strategy is not None and self.rate_strategy not in RATE_STRATEGIES:
            raise ValueError(f"unknown rate strategy {self.rate_strategy!r}")
        if self.ip_strategy not in RATE_STRATEGIES:
            raise ValueError(f"unknown IP-control strategy {self.ip_strategy!r}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.rate_strategy is None and self.sampler != "DRP":
            raise ValueError("only the DRP sampler works without a rate strategy")
        grid = np.linspace(0.0, 1.0, 1001)
        if self.rate_strategy is not None:
            if self.rate_strategy == "DAM" and not 0.0 <= self.rate_params["w"] <= 1.0:
                raise ValueError("DAM weight w must lie in [0, 1]")
            with np.errstate(all="ignore"):
                g = RATE_FUNCS[self.rate_strategy](grid, **self.rate_params)
            if not np.all(np.isfinite(g)) or np.any(g < 0):
                raise ValueError("rate parameters give a negative or non-finite g(t) on [0, 1]")
        if self.ip_strategy == "DAM" and not 0.0 <= self.ip_params["alpha"] <= 1.0:
            raise ValueError("DAM IP weight alpha must lie in [0, 1]")
        f = self._ip_raw(grid)
        if not np.all(np.isfinite(f)) or np.any(f < 0):
            raise ValueError("IP-control parameters give a negative or non-finite f(t) on [0, 1]")

    def _ip_raw(self, t):
        kw = dict(self.ip_params)
        if self.ip_strategy == "DAM":
            kw["time_dependent"] = self.dam_ip_time_dependent
        with np.errstate(all="ignore"):
            return IP_FUNCS[self.ip_strategy](np.asarray(t, dtype=np.float64), **kw)


def _check_unit(t):
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("normalized time must lie in [0, 1]")
    return t


def attack_rate(scenario: AttackScenario, t):
    """Evaluate the scenario's rate function ``g(t)`` on ``t in [0, 1]``."""
    if scenario.rate_strategy is None:
        raise ValueError("scenario has no fixed rate function (DRP draws its own)")
    t = _check_unit(t)
    out = RATE_FUNCS[scenario.rate_strategy](t, **scenario.rate_params)
    return float(out) if np.ndim(out) == 0 else out


def ip_count(scenario: AttackScenario, t):
    """Number of controlled source IPs: ``max(1, floor(f(t)))``."""
    t = _check_unit(t)
    n = np.maximum(np.floor(scenario._ip_raw(t)), 1).astype(np.int64)
    return int(n) if np.ndim(n) == 0 else n


def rate_max(g: Callable, t_min: float = 0.0, t_max: float = 1.0, breaks=()) -> float:
    """Supremum of ``g`` on ``[t_min, t_max]`` by dense grid plus local refinement.

    ``breaks`` lists points where ``g`` jumps; the left limit there is
    included since a supremum need not be attained.
    """
    grid = np.linspace(t_min, t_max, 4097)
    vals = np.asarray(g(grid), dtype=np.float64)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -float(g(np.array([x]))[0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    for bp in breaks:
        if t_min < bp <= t_max:
            left = np.nextafter(bp, -np.inf)
            best = max(best, float(np.asarray(g(np.array([left])))[0]))
    return best


def scenario_rate_max(scenario: AttackScenario) -> float:
    g = lambda t: RATE_FUNCS[scenario.rate_strategy](t, **scenario.rate_params)
    brk = _RATE_BREAKS.get(scenario.rate_strategy)
    return rate_max(g, breaks=(scenario.rate_params[brk],) if brk else ())


# --------------------------------------------------------------------------
# samplers

def _candidates(rng, t_min, t_max, draw_gaps):
    """Cumulative candidate times ``t_min + gap_1 + ...`` up to ``t_max``."""
    span = t_max - t_min
    chunk = int(CANDIDATE_RATE * span + 6.0 * math.sqrt(CANDIDATE_RATE * span) + 16)
    pieces, last = [], t_min
    while True:
        ts = last + np.cumsum(draw_gaps(chunk))
        pieces.append(ts)
        last = ts[-1]
        if last > t_max:
            break
    ts = np.concatenate(pieces)
    return ts[: np.searchsorted(ts, t_max, side="right")]


def sample_npp(t_min: float, t_max: float, g: Callable, g_max: float, seed=None) -> np.ndarray:
    """Thinning with exponential candidate gaps (mean 1/512).

    A candidate at ``t`` is kept when ``Uniform(0, g_max) < g(t)``.
    """
    if t_min >= t_max:
        return np.zeros(0)
    rng = np.random.default_rng(seed)
    ts = _candidates(rng, t_min, t_max, lambda n: rng.exponential(1.0 / CANDIDATE_RATE, n))
    u = rng.uniform(0.0, g_max, ts.size)
    return ts[u < np.asarray(g(ts), dtype=np.float64)]


def sample_nd(t_min: float, t_max: float, g: Callable, g_max: float, seed=None) -> np.ndarray:
    """Thinning with folded-normal candidate gaps ``|Normal(1/512, 1/1024)|``."""
    if t_min >= t_max:
        return np.zeros(0)
    rng = np.random.default_rng(seed)
    mu = 1.0 / CANDIDATE_RATE
    sigma = mu / 2.0
    ts = _candidates(rng, t_min, t_max, lambda n: np.abs(rng.normal(mu, sigma, n)))
    u = rng.uniform(0.0, 1.0, ts.size)
    return ts[u < np.asarray(g(ts), dtype=np.float64) / g_max]


DRP_ALPHA1, DRP_ALPHA2 = 3.0, 4.0
DRP_W_RANGES = ((0.0, 0.33), (0.33, 0.66), (0.66, 1.0))


def drp_intensity(t_min: float, t_max: float, rng):
    """Draw the piecewise mixed rate used by the DRP sampler.

    Returns ``(g, g_max, w, break_points)``. The interval is cut at one and
    two thirds and each piece gets its own weight ``w``.
    """
    w = np.array([rng.uniform(lo, hi) for lo, hi in DRP_W_RANGES])
    bps = (t_min + (t_max - t_min) / 3.0, t_min + 2.0 * (t_max - t_min) / 3.0)

    def g(t):
        t = np.asarray(t, dtype=np.float64)
        seg = np.searchsorted(bps, t, side="right")
        return dam_rate(t, w[seg], DRP_ALPHA1, DRP_ALPHA2)

    g_max = rate_max(g, t_min, t_max, breaks=bps)
    return g, g_max, w, bps


def sample_drp(t_min: float, t_max: float, seed=None) -> np.ndarray:
    """Doubly random sampler: random piecewise DAM rate, then NPP thinning."""
    if t_min >= t_max:
        return np.zeros(0)
    rng = np.random.default_rng(seed)
    g, g_max, _, _ = drp_intensity(t_min, t_max, rng)
    return sample_npp(t_min, t_max, g, g_max, rng)


def sample_injections(scenario: AttackScenario, rng) -> np.ndarray:
    """Injection times on the normalized interval ``[0, 1]``."""
    if scenario.sampler == "DRP":
        return sample_drp(0.0, 1.0, rng)
    g = lambda t: RATE_FUNCS[scenario.rate_strategy](t, **scenario.rate_params)
    g_max = scenario_rate_max(scenario)
    if g_max <= 0:
        return np.zeros(0)
    sampler = sample_npp if scenario.sampler == "NPP" else sample_nd
    return sampler(0.0, 1.0, g, g_max, rng)


# --------------------------------------------------------------------------
# messages and windows

@dataclass(frozen=True)
class Message:
    service_id: int
    method_id: int
    length: int
    client_id: int
    session_id: int
    protocol_version: int
    interface_version: int
    message_type: int
    return_code: int
    src_ip_index: int
    timestamp: float

    def __post_init__(self):
        for name, bits in FIELD_BITS.items():
            v = getattr(self, name)
            if not 0 <= v < (1 << bits):
                raise ValueError(f"{name}={v} does not fit in {bits} bits")
        if not self.timestamp >= 0:
            raise ValueError("timestamp must be >= 0")

    def fields(self) -> list:
        return [getattr(self, f) for f in FIELDS]

    def to_row(self) -> list:
        return self.fields() + [self.timestamp]

    @classmethod
    def from_row(cls, row) -> "Message":
        *ints, ts = row
        return cls(*(int(v) for v in ints), float(ts))


@dataclass(frozen=True)
class Window:
    """128 consecutive messages with a normal/attack label."""

    messages: tuple
    label: str = "normal"
    scenario_id: int = 0
    injected: tuple | None = None
    flagged: bool = False

    def __post_init__(self):
        msgs = tuple(self.messages)
        object.__setattr__(self, "messages", msgs)
        if len(msgs) != WINDOW_LEN:
            raise ValueError(f"window must hold {WINDOW_LEN} messages, got {len(msgs)}")
        ts = [m.timestamp for m in msgs]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("window timestamps must be ascending")
        if self.label not in ("normal", "attack"):
            raise ValueError(f"unknown label {self.label!r}")
        if not 0 <= self.scenario_id <= 8:
            raise ValueError("scenario_id must be in 0..8")
        inj = tuple(bool(x) for x in self.injected) if self.injected is not None else (False,) * WINDOW_LEN
        if len(inj) != WINDOW_LEN:
            raise ValueError("injected flags must match the message count")
        object.__setattr__(self, "injected", inj)
        if (self.label == "attack") != any(inj):
            raise ValueError("label must be 'attack' exactly when a message is injected")

    @property
    def n_injected(self) -> int:
        return sum(self.injected)

    def to_array(self) -> np.ndarray:
        return np.array([m.to_row() for m in self.messages], dtype=np.float64)

    def to_events(self, dims: int) -> EventSequences:
        """Per-source timestamps relative to the first message."""
        t0 = self.messages[0].timestamp
        t_span = self.messages[-1].timestamp - t0
        per = [[] for _ in range(dims)]
        for m in self.messages:
            if m.src_ip_index >= dims:
                raise ValueError(f"src_ip_index {m.src_ip_index} outside {dims} dims")
            per[m.src_ip_index].append(min(m.timestamp - t0, t_span))
        return EventSequences(tuple(np.array(p) for p in per), t_span)


@dataclass(frozen=True)
class EcuProfile:
    service_id: int
    method_id: int
    client_id: int
    message_type: int
    period: float
    payload_len: int


def default_ecus(dims: int) -> list:
    """Fixed service/method table; periods 10 ms to 25 ms."""
    types = (NOTIFICATION, REQUEST, REQUEST_NO_RETURN)
    return [
        EcuProfile(
            service_id=0x1001 + i,
            method_id=0x8001 + i,
            client_id=0x0100 + i,
            message_type=types[i % 3],
            period=0.010 * (1.0 + 0.5 * (i % 4)),
            payload_len=8 + 4 * (i % 5),
        )
        for i in range(dims)
    ]


def _message(ecu: EcuProfile, src: int, session: int, t: float, client: int | None = None) -> Message:
    return Message(
        service_id=ecu.service_id,
        method_id=ecu.method_id,
        length=8 + ecu.payload_len,
        client_id=ecu.client_id if client is None else client,
        session_id=session,
        protocol_version=1,
        interface_version=1,
        message_type=ecu.message_type,
        return_code=0,
        src_ip_index=src,
        timestamp=t,
    )


def _next_session(s: int) -> int:
    return 1 if s >= 0xFFFF else s + 1


def gen_normal_stream(ecus: Sequence[EcuProfile], n_messages: int, rng, start: float = 0.0) -> list:
    """First ``n_messages`` of the merged jittered periodic schedules.

    Each ECU starts at a random phase within its period; every gap is the
    period scaled by ``Uniform(0.9, 1.1)``.
    """
    total_rate = sum(1.0 / e.period for e in ecus)
    horizon = 1.3 * n_messages / total_rate
    while True:
        events = []
        for k, ecu in enumerate(ecus):
            n = int(horizon / (0.9 * ecu.period)) + 2
            gaps = ecu.period * rng.uniform(0.9, 1.1, n)
            ts = start + rng.uniform(0.0, ecu.period) + np.concatenate(([0.0], np.cumsum(gaps[:-1])))
            session0 = int(rng.integers(1, 0x10000))
            events.extend((t, k, session0, idx) for idx, t in enumerate(ts))
        events.sort(key=lambda x: (x[0], x[1]))
        if len(events) >= n_messages and events[n_messages - 1][0] <= start + horizon:
            break
        horizon *= 1.5
    out = []
    for t, k, s0, idx in events[:n_messages]:
        session = (s0 - 1 + idx) % 0xFFFF + 1
        out.append(_message(ecus[k], k, session, float(t)))
    return out


def gen_normal_window(dims: int, seed=None, ecus: Sequence[EcuProfile] | None = None,
                      scenario_id: int = 0) -> Window:
    if dims < 2:
        raise ValueError("need at least two ECUs")
    ecus = list(ecus) if ecus is not None else default_ecus(dims)
    rng = np.random.default_rng(seed)
    return Window(gen_normal_stream(ecus, WINDOW_LEN, rng), "normal", scenario_id)


def inject_span(messages: Sequence[Message], scenario: AttackScenario, ecus: Sequence[EcuProfile], rng):
    """Inject attack messages over the time range of ``messages``.

    The range is normalized to ``[0, 1]`` for sampling. At each injection
    time the source IP is drawn uniformly from the first ``ip_count(t)``
    entries of a shuffled pool of ECU addresses and the destination ECU
    uniformly from all ECUs; the message copies the destination's legitimate
    service/method pair with a fresh session id.

    Returns the merged messages and a parallel list of injected flags.
    """
    t0, t1 = messages[0].timestamp, messages[-1].timestamp
    if t1 <= t0:
        return list(messages), [False] * len(messages)
    u = sample_injections(scenario, rng)
    pool = rng.permutation(len(ecus))
    injected = []
    for x in u:
        n = min(ip_count(scenario, float(x)), len(pool))
        src = int(pool[rng.integers(n)])
        dst = ecus[int(rng.integers(len(ecus)))]
        session = int(rng.integers(1, 0x10000))
        injected.append(_message(dst, src, session, float(t0 + x * (t1 - t0)), client=ecus[src].client_id))
    tagged = [(m.timestamp, 0, k, m) for k, m in enumerate(messages)]
    tagged += [(m.timestamp, 1, k, m) for k, m in enumerate(injected)]
    tagged.sort(key=lambda x: (x[0], x[1], x[2]))
    return [x[3] for x in tagged], [x[1] == 1 for x in tagged]


def frame_windows(messages, flags, scenario_id: int = 0) -> list:
    """Cut a stream into consecutive 128-message windows; the tail is dropped."""
    out = []
    for s in range(0, len(messages) - WINDOW_LEN + 1, WINDOW_LEN):
        inj = flags[s: s + WINDOW_LEN]
        out.append(Window(messages[s: s + WINDOW_LEN], "attack" if any(inj) else "normal",
                          scenario_id, inj))
    return out


def inject_attack(w: Window, scenario: AttackScenario, ecus: Sequence[EcuProfile] | None = None,
                  rng=None) -> Window:
    """Inject attacks over one normal window and keep its first 128 messages.

    When nothing is injected (or every injection falls past the first 128
    merged messages) the original window comes back labeled normal with
    ``flagged=True`` so the caller can resample.
    """
    if w.label != "normal":
        raise ValueError("can only inject into a normal window")
    dims = max(m.src_ip_index for m in w.messages) + 1
    ecus = list(ecus) if ecus is not None else default_ecus(dims)
    rng = np.random.default_rng(scenario.seed if rng is None else rng)
    merged, flags = inject_span(w.messages, scenario, ecus, rng)
    if not any(flags[:WINDOW_LEN]):
        return Window(w.messages, "normal", w.scenario_id, None, flagged=True)
    return Window(merged[:WINDOW_LEN], "attack", w.scenario_id, flags[:WINDOW_LEN])


# --------------------------------------------------------------------------
# dataset

@dataclass(frozen=True)
class ScenarioRow:
    id: int
    attack_rate: str | None
    ip_ctrl: str
    sampler: str


SCENARIO_TABLE = (
    ScenarioRow(0, "PLA", "PLA", "NPP"),
    ScenarioRow(1, "DEA", "DEA", "NPP"),
    ScenarioRow(2, "ASA", "ASA", "NPP"),
    ScenarioRow(3, "DAM", "DAM", "NPP"),
    ScenarioRow(4, None, "DAM", "DRP"),
    ScenarioRow(5, "PLA", "PLA", "ND"),
    ScenarioRow(6, "DEA", "DEA", "ND"),
    ScenarioRow(7, "ASA", "ASA", "ND"),
    ScenarioRow(8, "DAM", "DAM", "ND"),
)


def scenario_for_row(row: ScenarioRow, dims: int, seed: int = 0) -> AttackScenario:
    return AttackScenario(
        rate_strategy=row.attack_rate,
        rate_params=dict(DEFAULT_RATE_PARAMS[row.attack_rate]) if row.attack_rate else {},
        ip_strategy=row.ip_ctrl,
        ip_params=default_ip_params(row.ip_ctrl, dims),
        sampler=row.sampler,
        seed=seed,
    )


def attack_window(scenario: AttackScenario, scenario_id: int, ecus, master_seed: int, index: int,
                  max_attempts: int = 20) -> Window:
    """One attack window cut from an injected three-window span."""
    for attempt in range(max_attempts):
        rng = derive_rng(master_seed, "attack", scenario_id, index, attempt)
        base = gen_normal_stream(ecus, WINDOW_LEN * SPAN_WINDOWS, rng)
        merged, flags = inject_span(base, scenario, ecus, rng)
        windows = [w for w in frame_windows(merged, flags, scenario_id) if w.label == "attack"]
        if windows:
            return windows[int(rng.integers(len(windows)))]
    raise DatasetError(f"scenario {scenario_id}: no attack window after {max_attempts} attempts")


def normal_window(scenario_id: int, ecus, master_seed: int, index: int) -> Window:
    rng = derive_rng(master_seed, "normal", scenario_id, index)
    return Window(gen_normal_stream(ecus, WINDOW_LEN, rng), "normal", scenario_id)


def split_counts(count: int) -> tuple:
    """``(train, val)`` windows per label for ``count`` windows in total."""
    per_label = count // 2
    val = int(round(per_label * 0.2))
    return per_label - val, val


def window_record(w: Window, split: str) -> dict:
    return {
        "scenario_id": w.scenario_id,
        "split": split,
        "label": w.label,
        "messages": [m.to_row() for m in w.messages],
    }


def window_from_record(rec: dict) -> Window:
    msgs = [Message.from_row(r) for r in rec["messages"]]
    label = rec["label"]
    # injected positions are not stored; mark the window as a whole
    inj = None if label == "normal" else (True,) + (False,) * (WINDOW_LEN - 1)
    return Window(msgs, label, int(rec["scenario_id"]), inj)


def build_dataset(rows: Sequence[ScenarioRow], counts, out_path, master_seed: int = 0,
                  dims: int = 6, workers: int = 1, config: dict | None = None) -> dict:
    """Generate labeled windows per scenario row and write train/val splits.

    Each scenario contributes ``counts`` windows (an int, or one per row),
    half normal and half attack, split 8:2 into ``train.jsonl`` and
    ``val.jsonl``. A ``manifest.json`` lists the rows in table order.
    Output bytes depend only on the arguments.
    """
    if dims < 2 or dims > (1 << FIELD_BITS["src_ip_index"]):
        raise ValueError("dims must be between 2 and 256")
    rows = list(rows)
    for r in rows:
        if r not in SCENARIO_TABLE:
            raise DatasetError(f"invalid scenario row {r}")
    counts = [int(counts)] * len(rows) if np.isscalar(counts) else [int(c) for c in counts]
    if len(counts) != len(rows):
        raise DatasetError("need one count per scenario row")
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    ecus = default_ecus(dims)

    jobs = []
    for row, count in zip(rows, counts):
        n_train, n_val = split_counts(count)
        scen = scenario_for_row(row, dims, seed=master_seed)
        for label in ("normal", "attack"):
            order = derive_rng(master_seed, "split", row.id, label == "attack").permutation(n_train + n_val)
            for k in range(n_train + n_val):
                split = "train" if order[k] < n_train else "val"
                jobs.append((row, scen, label, k, split))

    def make(job):
        row, scen, label, k, split = job
        if label == "normal":
            w = normal_window(row.id, ecus, master_seed, k)
        else:
            w = attack_window(scen, row.id, ecus, master_seed, k)
        return split, row.id, w

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            made = list(pool.map(make, jobs))
    else:
        made = [make(j) for j in jobs]

    by_split = {"train": [], "val": []}
    for split, rid, w in made:
        by_split[split].append((rid, w))
    for split, items in by_split.items():
        perm = derive_rng(master_seed, "order", split == "val").permutation(len(items))
        with open(out / f"{split}.jsonl", "w", encoding="utf-8") as fh:
            for k in perm:
                fh.write(json.dumps(window_record(items[k][1], split)) + "\n")

    manifest = {
        "tool": "mdhp",
        "version": _version(),
        "master_seed": master_seed,
        "dims": dims,
        "window_len": WINDOW_LEN,
        "fields": list(FIELDS) + ["timestamp"],
        "columns": ["ID", "Train", "Val", "Attk Rate", "IP Ctrl", "Sample"],
        "scenarios": [
            {
                "ID": f"{r.id:02d}",
                "Train": 2 * split_counts(c)[0],
                "Val": 2 * split_counts(c)[1],
                "Attk Rate": r.attack_rate or "/",
                "IP Ctrl": r.ip_ctrl,
                "Sample": r.sampler,
            }
            for r, c in zip(rows, counts)
        ],
        "config": config or {},
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _version() -> str:
    from . import __version__
    return __version__


def read_windows(path) -> list:
    """``(record, Window)`` pairs from a dataset split file."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append((rec, window_from_record(rec)))
            except (KeyError, ValueError, TypeError) as exc:
                raise DatasetError(f"{path}:{n}: {exc}") from exc
    return out


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def gen_toy_window(dims: int, label: str, seed=None, rate_ratio: float = 10.0) -> Window:
    """Strongly separable window for classifier sanity checks.

    Attack windows overlay the benign schedule with Poisson injections at
    ``rate_ratio`` times the total benign rate, so most of the 128 messages
    are injected.
    """
    rng = np.random.default_rng(seed)
    ecus = default_ecus(dims)
    base = gen_normal_stream(ecus, WINDOW_LEN, rng)
    if label == "normal":
        return Window(base, "normal")
    if label != "attack":
        raise ValueError(f"unknown label {label!r}")
    rate = rate_ratio * sum(1.0 / e.period for e in ecus)
    t0, t1 = base[0].timestamp, base[-1].timestamp
    n = rng.poisson(rate * (t1 - t0))
    times = np.sort(rng.uniform(t0, t1, n))
    inj = []
    for t in times:
        src = int(rng.integers(dims))
        dst = ecus[int(rng.integers(dims))]
        inj.append(_message(dst, src, int(rng.integers(1, 0x10000)), float(t), client=ecus[src].client_id))
    tagged = sorted([(m.timestamp, 0, k, m) for k, m in enumerate(base)]
                    + [(m.timestamp, 1, k, m) for k, m in enumerate(inj)], key=lambda x: x[:3])
    msgs = [x[3] for x in tagged][:WINDOW_LEN]
    flags = [x[1] == 1 for x in tagged][:WINDOW_LEN]
    return Window(msgs, "attack", 0, flags)
