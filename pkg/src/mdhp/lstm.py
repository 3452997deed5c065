"""MDHP-LSTM cell and a small window classifier with manual backprop.

The cell is a standard LSTM whose cell state is scaled elementwise by a
Hawkes gate ``hks = tanh(A alpha - B (beta * T_span) + C theta)`` computed
from the window's fitted MDHP parameters:

    i, f, o = sigmoid(W x + U h_prev + b)        (one set per gate)
    c_tilde = tanh(W_c x + U_c h_prev + b_c)
    c = hks * (f * c_prev + i * c_tilde)
    h = o * tanh(c)
    y = W_y h

All functions accept a single vector or a batch of row vectors.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, DatasetError, DimensionMismatchError, NumericalError, SingleClassError
from .metrics import auc, binary_metrics, roc_curve
from .optim import AdamW

log = logging.getLogger(__name__)

GATES = ("i", "f", "c", "o")
N_MSG_FEATURES = 11
CHECKPOINT_FORMAT = 1


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _outer(d, x):
    return d.T @ x if d.ndim == 2 else np.outer(d, x)


def _sum_rows(d):
    return d.sum(axis=0) if d.ndim == 2 else d


@dataclass
class CellWeights:
    W_i: np.ndarray
    W_f: np.ndarray
    W_c: np.ndarray
    W_o: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_c: np.ndarray
    U_o: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W_y: np.ndarray

    def __post_init__(self):
        H, I = self.W_i.shape
        D = self.C.shape[1]
        want = {
            **{f"W_{g}": (H, I) for g in GATES},
            **{f"U_{g}": (H, H) for g in GATES},
            **{f"b_{g}": (H,) for g in GATES},
            "A": (H, D * D),
            "B": (H, D * D),
            "C": (H, D),
        }
        for name, shape in want.items():
            if getattr(self, name).shape != shape:
                raise DimensionMismatchError(f"{name} has shape {getattr(self, name).shape}, want {shape}")
        if self.W_y.ndim != 2 or self.W_y.shape[1] != H:
            raise DimensionMismatchError(f"W_y must have {H} columns")
        for f in fields(self):
            if not np.all(np.isfinite(getattr(self, f.name))):
                raise NumericalError(f"non-finite entries in {f.name}")

    @property
    def hidden(self) -> int:
        return self.W_i.shape[0]

    @property
    def n_input(self) -> int:
        return self.W_i.shape[1]

    @property
    def dims(self) -> int:
        return self.C.shape[1]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def init(cls, n_input: int, hidden: int, dims: int, n_out: int | None = None, rng=None):
        """Uniform ``(-1/sqrt(fan_in), 1/sqrt(fan_in))`` initialization."""
        rng = np.random.default_rng(rng)
        n_out = hidden if n_out is None else n_out
        k = 1.0 / math.sqrt(hidden)
        u = lambda *shape, s=k: rng.uniform(-s, s, shape)
        return cls(
            **{f"W_{g}": u(hidden, n_input) for g in GATES},
            **{f"U_{g}": u(hidden, hidden) for g in GATES},
            **{f"b_{g}": u(hidden) for g in GATES},
            A=u(hidden, dims * dims, s=1.0 / dims),
            B=u(hidden, dims * dims, s=1.0 / dims),
            C=u(hidden, dims, s=1.0 / math.sqrt(dims)),
            W_y=u(n_out, hidden),
        )


@dataclass(frozen=True)
class HawkesFeatures:
    """Window-level MDHP inputs to the Hawkes gate."""

    alpha_flat: np.ndarray
    beta_tspan_flat: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha_flat, dtype=np.float64)
        b = np.asarray(self.beta_tspan_flat, dtype=np.float64)
        t = np.asarray(self.theta, dtype=np.float64)
        if a.shape[-1] != t.shape[-1] ** 2 or b.shape != a.shape:
            raise DimensionMismatchError("need D^2 alpha and beta*T_span entries for D thetas")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(t))):
            raise NumericalError("Hawkes features must be finite")
        object.__setattr__(self, "alpha_flat", a)
        object.__setattr__(self, "beta_tspan_flat", b)
        object.__setattr__(self, "theta", t)

    @property
    def dims(self) -> int:
        return self.theta.shape[-1]

    @classmethod
    def from_params(cls, params, t_span: float) -> "HawkesFeatures":
        return cls(params.alpha.ravel(), params.beta.ravel() * t_span, params.theta)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.alpha_flat, self.beta_tspan_flat, self.theta], axis=-1)

    @classmethod
    def from_vector(cls, v, dims: int) -> "HawkesFeatures":
        v = np.asarray(v, dtype=np.float64)
        d2 = dims * dims
        return cls(v[..., :d2], v[..., d2: 2 * d2], v[..., 2 * d2:])


def hawkes_gate(hf: HawkesFeatures, w: CellWeights) -> np.ndarray:
    if hf.dims != w.dims:
        raise DimensionMismatchError(f"features have D={hf.dims}, weights D={w.dims}")
    return np.tanh(hf.alpha_flat @ w.A.T - hf.beta_tspan_flat @ w.B.T + hf.theta @ w.C.T)


def hawkes_gate_backward(hf: HawkesFeatures, hks, d_hks, w: CellWeights) -> dict:
    d_pre = d_hks * (1.0 - hks * hks)
    return {
        "A": _outer(d_pre, hf.alpha_flat),
        "B": -_outer(d_pre, hf.beta_tspan_flat),
        "C": _outer(d_pre, hf.theta),
    }


@dataclass
class CellTape:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    hks: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    s: np.ndarray
    tc: np.ndarray
    h: np.ndarray


def cell_forward(x, h_prev, c_prev, hks, w: CellWeights, tape: bool = False):
    """One MDHP-LSTM step; returns ``(h, c, y)`` plus the tape if requested."""
    if x.shape[-1] != w.n_input or h_prev.shape[-1] != w.hidden or c_prev.shape[-1] != w.hidden:
        raise DimensionMismatchError("input or state size does not match the weights")
    if np.shape(hks)[-1] != w.hidden:
        raise DimensionMismatchError("hks size does not match the hidden size")
    i = sigmoid(x @ w.W_i.T + h_prev @ w.U_i.T + w.b_i)
    f = sigmoid(x @ w.W_f.T + h_prev @ w.U_f.T + w.b_f)
    g = np.tanh(x @ w.W_c.T + h_prev @ w.U_c.T + w.b_c)
    o = sigmoid(x @ w.W_o.T + h_prev @ w.U_o.T + w.b_o)
    s = f * c_prev + i * g
    c = hks * s
    tc = np.tanh(c)
    h = o * tc
    y = h @ w.W_y.T
    if tape:
        return h, c, y, CellTape(x, h_prev, c_prev, hks, i, f, g, o, s, tc, h)
    return h, c, y


def cell_backward(t: CellTape, w: CellWeights, dh=None, dc=None, dy=None) -> dict:
    """Reverse-mode gradients of one step.

    ``dh``, ``dc`` and ``dy`` are upstream gradients of the loss with
    respect to ``h``, ``c`` and ``y`` (``None`` means zero). Returns
    gradients for every :class:`CellWeights` field plus ``x``, ``h_prev``,
    ``c_prev`` and ``hks``.
    """
    if t is None:
        raise ValueError("cell_backward needs the tape from cell_forward(..., tape=True)")
    zeros = np.zeros_like(t.h)
    dh = zeros if dh is None else dh
    dc = zeros if dc is None else dc
    out = {}
    if dy is not None:
        dh = dh + dy @ w.W_y
        out["W_y"] = _outer(dy, t.h)
    else:
        out["W_y"] = np.zeros_like(w.W_y)
    d_o = dh * t.tc
    dc = dc + dh * t.o * (1.0 - t.tc * t.tc)
    out["hks"] = dc * t.s
    ds = dc * t.hks
    da = {
        "i": ds * t.g * t.i * (1.0 - t.i),
        "f": ds * t.c_prev * t.f * (1.0 - t.f),
        "c": ds * t.i * (1.0 - t.g * t.g),
        "o": d_o * t.o * (1.0 - t.o),
    }
    dx = 0.0
    dhp = 0.0
    for gname in GATES:
        a = da[gname]
        out[f"W_{gname}"] = _outer(a, t.x)
        out[f"U_{gname}"] = _outer(a, t.h_prev)
        out[f"b_{gname}"] = _sum_rows(a)
        dx = dx + a @ getattr(w, f"W_{gname}")
        dhp = dhp + a @ getattr(w, f"U_{gname}")
    out["x"] = dx
    out["h_prev"] = dhp
    out["c_prev"] = ds * t.f
    for k in ("A", "B", "C"):
        out[k] = np.zeros_like(getattr(w, k))
    return out


# --------------------------------------------------------------------------
# network

@dataclass
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x) -> "Normalizer":
        x = np.asarray(x, dtype=np.float64).reshape(-1, np.shape(x)[-1])
        std = x.std(axis=0)
        return cls(x.mean(axis=0), np.where(std > 1e-12, std, 1.0))

    def __call__(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std


@dataclass
class ModelConfig:
    hidden: int = 32
    layers: int = 2
    smb: int = 16
    head: int = 16
    dims: int = 6
    pooling: str = "mean"

    def __post_init__(self):
        if self.layers not in (1, 2):
            raise ConfigError("layers must be 1 or 2")
        if min(self.hidden, self.smb, self.head, self.dims) < 1:
            raise ConfigError("layer sizes must be >= 1")
        if self.pooling != "mean":
            # slot reserved for an attention block
            raise ConfigError("only mean pooling is implemented")


@dataclass
class Model:
    cfg: ModelConfig
    params: dict
    msg_norm: Normalizer
    hf_norm: Normalizer

    @classmethod
    def init(cls, cfg: ModelConfig, msg_norm: Normalizer, hf_norm: Normalizer, seed: int = 0) -> "Model":
        rng = np.random.default_rng(seed)
        p = {}
        k = 1.0 / math.sqrt(N_MSG_FEATURES)
        p["smb.W"] = rng.uniform(-k, k, (cfg.smb, N_MSG_FEATURES))
        p["smb.b"] = rng.uniform(-k, k, cfg.smb)
        n_in = cfg.smb
        for l in range(cfg.layers):
            cw = CellWeights.init(n_in, cfg.hidden, cfg.dims, rng=rng)
            for name, arr in cw.as_dict().items():
                p[f"l{l}.{name}"] = arr
            n_in = cfg.hidden
        k = 1.0 / math.sqrt(cfg.hidden)
        p["head.W1"] = rng.uniform(-k, k, (cfg.head, cfg.hidden))
        p["head.b1"] = rng.uniform(-k, k, cfg.head)
        k = 1.0 / math.sqrt(cfg.head)
        p["head.W2"] = rng.uniform(-k, k, (2, cfg.head))
        p["head.b2"] = rng.uniform(-k, k, 2)
        return cls(cfg, p, msg_norm, hf_norm)

    def cell(self, l: int) -> CellWeights:
        return CellWeights(**{f.name: self.params[f"l{l}.{f.name}"] for f in fields(CellWeights)})

    def n_parameters(self) -> int:
        return int(sum(v.size for v in self.params.values()))


def window_features(window) -> np.ndarray:
    """``(128, 11)`` array: header fields plus time since the window start."""
    arr = window.to_array()
    arr[:, -1] -= arr[0, -1]
    return arr


def _stacked(w: CellWeights):
    Wst = np.concatenate([getattr(w, f"W_{g}") for g in GATES])
    Ust = np.concatenate([getattr(w, f"U_{g}") for g in GATES])
    bst = np.concatenate([getattr(w, f"b_{g}") for g in GATES])
    return Wst, Ust, bst


def layer_forward(seq, hks, w: CellWeights):
    """Run one cell over ``seq`` of shape ``(N, T, I)`` from zero state.

    Equivalent to stepping :func:`cell_forward`, with the input projection
    done for all steps at once. Returns ``(hs, ys, cache)``.
    """
    N, T, _ = seq.shape
    H = w.hidden
    Wst, Ust, bst = _stacked(w)
    xp = seq @ Wst.T + bst
    acts = np.empty((N, T, 4 * H))
    s_all = np.empty((N, T, H))
    tc_all = np.empty((N, T, H))
    hs = np.empty((N, T, H))
    cs = np.empty((N, T, H))
    h = np.zeros((N, H))
    c = np.zeros((N, H))
    for t in range(T):
        a = xp[:, t] + h @ Ust.T
        a[:, :2 * H] = sigmoid(a[:, :2 * H])
        a[:, 2 * H:3 * H] = np.tanh(a[:, 2 * H:3 * H])
        a[:, 3 * H:] = sigmoid(a[:, 3 * H:])
        i, f, g, o = a[:, :H], a[:, H:2 * H], a[:, 2 * H:3 * H], a[:, 3 * H:]
        s = f * c + i * g
        c = hks * s
        tc = np.tanh(c)
        h = o * tc
        acts[:, t], s_all[:, t], tc_all[:, t], hs[:, t], cs[:, t] = a, s, tc, h, c
    ys = hs @ w.W_y.T
    cache = dict(seq=seq, hks=hks, acts=acts, s=s_all, tc=tc_all, hs=hs, cs=cs, Ust=Ust, Wst=Wst)
    return hs, ys, cache


def layer_backward(cache, w: CellWeights, dh_ext=None, dy=None):
    """Backprop through :func:`layer_forward`.

    ``dh_ext`` and ``dy`` are ``(N, T, H)`` and ``(N, T, O)`` upstream
    gradients on the hidden states and outputs. Returns gradients for the
    cell weights (without ``A``, ``B``, ``C``) plus ``seq`` and ``hks``.
    """
    seq, hks, acts = cache["seq"], cache["hks"], cache["acts"]
    hs, cs, s_all, tc_all = cache["hs"], cache["cs"], cache["s"], cache["tc"]
    N, T, H = hs.shape
    dh_tot = np.zeros((N, T, H)) if dh_ext is None else np.array(dh_ext, dtype=np.float64)
    out = {}
    if dy is not None:
        dh_tot += dy @ w.W_y
        out["W_y"] = dy.reshape(N * T, -1).T @ hs.reshape(N * T, H)
    else:
        out["W_y"] = np.zeros_like(w.W_y)
    da = np.empty((N, T, 4 * H))
    dh_next = np.zeros((N, H))
    dc_next = np.zeros((N, H))
    d_hks = np.zeros((N, H))
    zero = np.zeros((N, H))
    Ust = cache["Ust"]
    for t in reversed(range(T)):
        a = acts[:, t]
        i, f, g, o = a[:, :H], a[:, H:2 * H], a[:, 2 * H:3 * H], a[:, 3 * H:]
        tc = tc_all[:, t]
        c_prev = cs[:, t - 1] if t else zero
        dh = dh_tot[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        d_hks += dc * s_all[:, t]
        ds = dc * hks
        d = da[:, t]
        d[:, :H] = ds * g * i * (1.0 - i)
        d[:, H:2 * H] = ds * c_prev * f * (1.0 - f)
        d[:, 2 * H:3 * H] = ds * i * (1.0 - g * g)
        d[:, 3 * H:] = dh * tc * o * (1.0 - o)
        dc_next = ds * f
        dh_next = d @ Ust
    h_prev = np.concatenate([np.zeros((N, 1, H)), hs[:, :-1]], axis=1)
    da2 = da.reshape(N * T, -1)
    dW = da2.T @ seq.reshape(N * T, -1)
    dU = da2.T @ h_prev.reshape(N * T, H)
    db = da.sum(axis=(0, 1))
    for k, gname in enumerate(GATES):
        sl = slice(k * H, (k + 1) * H)
        out[f"W_{gname}"] = dW[sl]
        out[f"U_{gname}"] = dU[sl]
        out[f"b_{gname}"] = db[sl]
    out["seq"] = da @ cache["Wst"]
    out["hks"] = d_hks
    return out


def _forward(model: Model, X, HF, keep: bool):
    """Batched forward. ``X`` is ``(N, T, 11)`` raw, ``HF`` is ``(N, 2D^2 + D)`` raw."""
    cfg = model.cfg
    p = model.params
    Xn = model.msg_norm(X)
    hf = HawkesFeatures.from_vector(model.hf_norm(HF), cfg.dims)
    Z = np.tanh(Xn @ p["smb.W"].T + p["smb.b"])
    seq = Z
    caches, cells = [], []
    for l in range(cfg.layers):
        w = model.cell(l)
        hks = hawkes_gate(hf, w)
        hs, seq, cache = layer_forward(seq, hks, w)
        caches.append(cache)
        cells.append(w)
    pooled = hs.mean(axis=1)
    z_pre = pooled @ p["head.W1"].T + p["head.b1"]
    z = np.maximum(z_pre, 0.0)
    logits = z @ p["head.W2"].T + p["head.b2"]
    cache = dict(Xn=Xn, Z=Z, hf=hf, caches=caches, cells=cells, pooled=pooled, z_pre=z_pre, z=z)
    return logits, (cache if keep else None)


def network_forward(model: Model, window, hf: HawkesFeatures) -> np.ndarray:
    """Two class logits (normal, attack) for one window."""
    X = window_features(window) if not isinstance(window, np.ndarray) else np.asarray(window, dtype=np.float64)
    if X.shape != (128, N_MSG_FEATURES):
        raise DimensionMismatchError(f"window must be 128 x {N_MSG_FEATURES}, got {X.shape}")
    if hf.dims != model.cfg.dims:
        raise DimensionMismatchError(f"features have D={hf.dims}, model D={model.cfg.dims}")
    logits, _ = _forward(model, X[None], hf.vector()[None], keep=False)
    return logits[0]


def predict_logits(model: Model, X, HF, batch_size: int = 256) -> np.ndarray:
    out = [_forward(model, X[s: s + batch_size], HF[s: s + batch_size], keep=False)[0]
           for s in range(0, len(X), batch_size)]
    return np.concatenate(out) if out else np.zeros((0, 2))


def softmax_xent(logits, y):
    """Mean cross-entropy and its gradient with respect to the logits."""
    m = logits.max(axis=1, keepdims=True)
    ex = np.exp(logits - m)
    prob = ex / ex.sum(axis=1, keepdims=True)
    n = len(y)
    loss = float(-np.mean(np.log(prob[np.arange(n), y] + 1e-300)))
    d = prob.copy()
    d[np.arange(n), y] -= 1.0
    return loss, d / n


def loss_and_grad(model: Model, X, HF, y):
    """Mean cross-entropy over the batch and gradients for every parameter."""
    logits, k = _forward(model, X, HF, keep=True)
    loss, d_logits = softmax_xent(logits, np.asarray(y))
    p = model.params
    g = {}
    g["head.W2"] = d_logits.T @ k["z"]
    g["head.b2"] = d_logits.sum(axis=0)
    dz = (d_logits @ p["head.W2"]) * (k["z_pre"] > 0)
    g["head.W1"] = dz.T @ k["pooled"]
    g["head.b1"] = dz.sum(axis=0)
    d_pooled = dz @ p["head.W1"]
    T = k["Z"].shape[1]
    dh_ext = np.repeat((d_pooled / T)[:, None, :], T, axis=1)
    dy = None
    for l in reversed(range(model.cfg.layers)):
        w = k["cells"][l]
        gr = layer_backward(k["caches"][l], w, dh_ext=dh_ext, dy=dy)
        gr.update(hawkes_gate_backward(k["hf"], k["caches"][l]["hks"], gr["hks"], w))
        for f in fields(CellWeights):
            g[f"l{l}.{f.name}"] = gr[f.name]
        dh_ext, dy = None, gr["seq"]
    d_pre = dy * (1.0 - k["Z"] ** 2)
    g["smb.W"] = d_pre.reshape(-1, d_pre.shape[-1]).T @ k["Xn"].reshape(-1, k["Xn"].shape[-1])
    g["smb.b"] = d_pre.sum(axis=(0, 1))
    return loss, g, logits


# --------------------------------------------------------------------------
# training

@dataclass(frozen=True)
class TrainConfig:
    max_epoch: int = 50
    learning_rate: float = 5e-5
    weight_decay: float = 5e-5
    batch_size: int = 8
    seed_base: int = 1024
    rank: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.max_epoch < 1:
            raise ConfigError("max_epoch must be >= 1")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ConfigError("learning_rate must be > 0 and weight_decay >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")

    @property
    def seed(self) -> int:
        return self.seed_base + self.rank

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        model = d.pop("model", {})
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown training options: {sorted(unknown)}")
        try:
            mc = model if isinstance(model, ModelConfig) else ModelConfig(**model)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(model=mc, **d)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Dataset:
    """Raw message features, raw Hawkes feature vectors and labels (1 = attack)."""

    X: np.ndarray
    HF: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.HF = np.asarray(self.HF, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if not (len(self.X) == len(self.HF) == len(self.y)):
            raise DatasetError("features and labels disagree in length")
        if len(self.X) and self.X.shape[1:] != (128, N_MSG_FEATURES):
            raise DatasetError(f"windows must be 128 x {N_MSG_FEATURES}")

    def __len__(self):
        return len(self.y)

    @classmethod
    def from_windows(cls, windows, features) -> "Dataset":
        X = np.stack([window_features(w) for w in windows]) if windows else np.zeros((0, 128, N_MSG_FEATURES))
        HF = np.stack([f.vector() for f in features]) if features else np.zeros((0, 0))
        y = np.array([1 if w.label == "attack" else 0 for w in windows], dtype=np.int64)
        return cls(X, HF, y)


@dataclass
class TrainResult:
    model: Model
    trace: list


def train(train_set: Dataset, cfg: TrainConfig | None = None, val_set: Dataset | None = None) -> TrainResult:
    """Minimize cross-entropy with AdamW; record loss and accuracy per epoch."""
    cfg = cfg or TrainConfig()
    if len(train_set) == 0:
        raise DatasetError("training set is empty")
    dims = cfg.model.dims
    if train_set.HF.shape[1] != 2 * dims * dims + dims:
        raise DimensionMismatchError(f"Hawkes features do not match dims={dims}")
    model = Model.init(cfg.model, Normalizer.fit(train_set.X), Normalizer.fit(train_set.HF), seed=cfg.seed)
    opt = AdamW(cfg.learning_rate, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(cfg.seed)
    trace = []
    n = len(train_set)
    for epoch in range(1, cfg.max_epoch + 1):
        order = rng.permutation(n)
        losses = []
        for s in range(0, n, cfg.batch_size):
            idx = order[s: s + cfg.batch_size]
            loss, grads, _ = loss_and_grad(model, train_set.X[idx], train_set.HF[idx], train_set.y[idx])
            if not math.isfinite(loss):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch starting {s}")
            model.params = opt.step(model.params, grads)
            losses.append(loss * len(idx))
        row = {"epoch": epoch, "train_loss": float(sum(losses) / n),
               "train_acc": accuracy(model, train_set)}
        if val_set is not None and len(val_set):
            row["val_acc"] = accuracy(model, val_set)
        trace.append(row)
        log.info("epoch %d %s", epoch, row)
    return TrainResult(model, trace)


def accuracy(model: Model, data: Dataset) -> float:
    pred = predict_logits(model, data.X, data.HF).argmax(axis=1)
    return float(np.mean(pred == data.y))


def evaluate(model: Model, data: Dataset) -> dict:
    """Binary metrics with attack as positive; ROC over the logit difference."""
    if len(data) == 0:
        raise DatasetError("evaluation set is empty")
    if len(np.unique(data.y)) < 2:
        raise SingleClassError("evaluation set holds a single class")
    logits = predict_logits(model, data.X, data.HF)
    score = logits[:, 1] - logits[:, 0]
    m = binary_metrics(data.y, score > 0)
    fpr, tpr, thr = roc_curve(data.y, score)
    m["auc"] = auc(fpr, tpr)
    m["roc"] = {"fpr": fpr.tolist(), "tpr": tpr.tolist()}
    return m


def write_trace(path, trace) -> None:
    cols = sorted({k for row in trace for k in row}, key=lambda c: (c != "epoch", c))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in trace:
            fh.write(",".join(repr(row.get(c, "")) for c in cols) + "\n")


# --------------------------------------------------------------------------
# checkpoints

def save_checkpoint(model: Model, path, extra: dict | None = None) -> None:
    """Write ``<path>.npz`` with all arrays and ``<path>.json`` with the manifest."""
    from . import __version__

    path = Path(path)
    arrays = dict(model.params)
    arrays["norm.msg.mean"] = model.msg_norm.mean
    arrays["norm.msg.std"] = model.msg_norm.std
    arrays["norm.hf.mean"] = model.hf_norm.mean
    arrays["norm.hf.std"] = model.hf_norm.std
    npz = path.with_suffix(".npz")
    with open(npz, "wb") as fh:
        np.savez(fh, **arrays)
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "version": __version__,
        "model": asdict(model.cfg),
        "shapes": {k: list(v.shape) for k, v in sorted(arrays.items())},
        **(extra or {}),
    }
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> Model:
    path = Path(path)
    npz, js = path.with_suffix(".npz"), path.with_suffix(".json")
    if not npz.exists() or not js.exists():
        raise FileNotFoundError(f"checkpoint {path} not found (need {npz.name} and {js.name})")
    with open(js, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise DatasetError(f"unsupported checkpoint format {manifest.get('format')!r}")
    with np.load(npz) as z:
        arrays = {k: z[k] for k in z.files}
    for k, shape in manifest["shapes"].items():
        if k not in arrays or list(arrays[k].shape) != shape:
            raise DatasetError(f"checkpoint array {k} missing or misshapen")
    msg = Normalizer(arrays.pop("norm.msg.mean"), arrays.pop("norm.msg.std"))
    hf = Normalizer(arrays.pop("norm.hf.mean"), arrays.pop("norm.hf.std"))
    return Model(ModelConfig(**manifest["model"]), arrays, msg, hf)
