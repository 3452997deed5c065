"""Command-line pipeline: gen | estimate | report-cdf | train | eval.

Every command takes ``--config PATH`` (JSON) and flag overrides; flags win.
Exit codes: 0 success, 2 configuration error, 3 I/O or dataset error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    DatasetError,
    DegenerateWindowError,
    NumericalError,
    SingleClassError,
)
from .lstm import Dataset, TrainConfig, evaluate, load_checkpoint, save_checkpoint, train, write_trace
from .metrics import ecdf, ks_statistic
from .pipeline import features_from_record
from .solver import (
    SolverConfig,
    batch_estimate,
    dump_record,
    format_report_table,
    read_dump,
    record_params,
    write_dump,
)
from .traffic import SCENARIO_TABLE, build_dataset, file_sha256, read_windows

log = logging.getLogger("mdhp")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
SPLITS = ("train", "val")

DEFAULTS = {
    "master_seed": 0,
    "workers": 1,
    "dims": 6,
    "gen": {"count": 100, "scenarios": list(range(9))},
    "solver": {},
    "train": {},
    "report": {"pair": [0, 0]},
}


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def resolve_config(args) -> dict:
    """Defaults, then the config file, then command-line flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        cfg = _merge(cfg, file_cfg)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.dims is not None:
        cfg["dims"] = args.dims
    if getattr(args, "count", None) is not None:
        cfg["gen"]["count"] = args.count
    if getattr(args, "scenario", None) is not None:
        cfg["gen"]["scenarios"] = [args.scenario]
    if getattr(args, "pair", None) is not None:
        cfg["report"]["pair"] = list(args.pair)
    if getattr(args, "epochs", None) is not None:
        cfg["train"] = {**cfg["train"], "max_epoch": args.epochs}
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    for s in cfg["gen"]["scenarios"]:
        if s not in range(9):
            raise ConfigError(f"scenario {s} outside 0..8")
    if cfg["gen"]["count"] < 0:
        raise ConfigError("count must be >= 0")
    return cfg


def _solver_cfg(cfg) -> SolverConfig:
    try:
        return SolverConfig.from_dict(cfg["solver"])
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _train_cfg(cfg) -> TrainConfig:
    d = dict(cfg["train"])
    d["model"] = {"dims": cfg["dims"], **d.get("model", {})}
    try:
        return TrainConfig.from_dict(d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _dataset_files(path) -> list:
    """``(split, file)`` pairs for a dataset directory or a single split file."""
    p = Path(path)
    if p.is_dir():
        files = [(s, p / f"{s}.jsonl") for s in SPLITS if (p / f"{s}.jsonl").exists()]
        if not files:
            raise DatasetError(f"{p} holds no train.jsonl or val.jsonl")
        return files
    if not p.exists():
        raise FileNotFoundError(f"dataset {p} not found")
    return [(p.stem, p)]


def _dataset_dims(path, default: int, override=None) -> int:
    """``--dims`` if given, else the dataset manifest, else the config."""
    if override is not None:
        return override
    p = Path(path)
    man = (p if p.is_dir() else p.parent) / "manifest.json"
    if man.exists():
        with open(man, encoding="utf-8") as fh:
            return int(json.load(fh).get("dims", default))
    return default


# --------------------------------------------------------------------------
# commands

def cmd_gen(args, cfg) -> int:
    if not args.out:
        raise ConfigError("gen needs --out DIR")
    rows = [SCENARIO_TABLE[s] for s in cfg["gen"]["scenarios"]]
    manifest = build_dataset(rows, cfg["gen"]["count"], args.out, master_seed=cfg["master_seed"],
                             dims=cfg["dims"], workers=cfg["workers"], config=cfg)
    sums = {s: file_sha256(Path(args.out) / f"{s}.jsonl") for s in SPLITS}
    print(json.dumps({"scenarios": manifest["scenarios"], "sha256": sums}, sort_keys=True))
    return EXIT_OK


def cmd_estimate(args, cfg) -> int:
    if not args.out:
        raise ConfigError("estimate needs --out DIR")
    scfg = _solver_cfg(cfg)
    dims = _dataset_dims(args.dataset, cfg["dims"], args.dims)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records, reports = [], []
    for split, path in _dataset_files(args.dataset):
        pairs = read_windows(path)
        windows = [w for _, w in pairs]
        events = [w.to_events(dims) for w in windows]
        results, report = batch_estimate(events, scfg, cfg["workers"])
        for k, (rec, ev, res) in enumerate(zip([r for r, _ in pairs], events, results)):
            if res is None:
                continue
            records.append(dump_record(f"{split}:{k}", res, split=split, label=rec["label"],
                                       scenario_id=rec["scenario_id"], t_span=ev.t_span))
        if report.n_windows:
            reports.append(report)
        for k, msg in report.failures:
            log.warning("%s window %d failed: %s", split, k, msg)
    write_dump(out / "params.jsonl", records)
    with open(out / "report.csv", "w", encoding="utf-8") as fh:
        fh.write(format_report_table(reports))
    print(format_report_table(reports), end="")
    return EXIT_OK


def cdf_report(records, pair) -> dict:
    """Per-label empirical CDFs of alpha, beta, theta at ``pair`` and KS statistics."""
    labels = sorted({r.get("label") for r in records})
    if len(labels) < 2:
        raise SingleClassError(f"dump holds labels {labels}; need normal and attack")
    i, j = pair
    by = {lab: [record_params(r) for r in records if r.get("label") == lab] for lab in labels}
    d = by[labels[0]][0].dims
    if not (0 <= i < d and 0 <= j < d):
        raise ConfigError(f"pair ({i}, {j}) outside {d} dims")
    values = {
        lab: {
            "alpha": np.array([p.alpha[i, j] for p in ps]),
            "beta": np.array([p.beta[i, j] for p in ps]),
            "theta": np.array([p.theta[i] for p in ps]),
            "alpha_pooled": np.concatenate([p.alpha.ravel() for p in ps]),
        }
        for lab, ps in by.items()
    }
    a, b = ("normal", "attack") if set(labels) == {"normal", "attack"} else labels
    ks = {name: ks_statistic(values[a][name], values[b][name]) for name in values[a]}
    rows = []
    for lab in labels:
        for name in ("alpha", "beta", "theta"):
            x, f = ecdf(values[lab][name])
            rows += [(name, lab, float(v), float(c)) for v, c in zip(x, f)]
    return {"pair": [i, j], "ks": ks, "rows": rows}


def cmd_report_cdf(args, cfg) -> int:
    records = read_dump(args.dump)
    rep = cdf_report(records, cfg["report"]["pair"])
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("param,label,value,cum_frac\n")
            for name, lab, v, c in rep["rows"]:
                fh.write(f"{name},{lab},{v!r},{c!r}\n")
    print(json.dumps({"pair": rep["pair"], "ks": rep["ks"]}, sort_keys=True))
    return EXIT_OK


def load_split(dataset, dump_path, split: str, dims: int) -> Dataset:
    """Windows of one split joined with their fitted features from a dump."""
    files = dict(_dataset_files(dataset))
    if split not in files:
        raise DatasetError(f"dataset has no {split} split")
    feats = {r["window_id"]: r for r in read_dump(dump_path)}
    windows, hfs = [], []
    for k, (_, w) in enumerate(read_windows(files[split])):
        rec = feats.get(f"{split}:{k}")
        if rec is None:
            continue
        if rec["dims"] != dims:
            raise DatasetError(f"dump has dims={rec['dims']}, expected {dims}")
        windows.append(w)
        hfs.append(features_from_record(rec))
    return Dataset.from_windows(windows, hfs)


def cmd_train(args, cfg) -> int:
    if not args.out:
        raise ConfigError("train needs --out CHECKPOINT")
    if not args.dump:
        raise ConfigError("train needs --dump PARAMS")
    cfg["dims"] = _dataset_dims(args.dataset, cfg["dims"], args.dims)
    tcfg = _train_cfg(cfg)
    dims = tcfg.model.dims
    tr = load_split(args.dataset, args.dump, "train", dims)
    try:
        va = load_split(args.dataset, args.dump, "val", dims)
    except DatasetError:
        va = None
    result = train(tr, tcfg, va)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.model, out, extra={"train_config": tcfg.as_dict(),
                                              "master_seed": cfg["master_seed"]})
    write_trace(out.with_suffix(".trace.csv"), result.trace)
    print(json.dumps(result.trace[-1], sort_keys=True))
    return EXIT_OK


def cmd_eval(args, cfg) -> int:
    if not args.checkpoint:
        raise ConfigError("eval needs --checkpoint PATH")
    if not args.dump:
        raise ConfigError("eval needs --dump PARAMS")
    model = load_checkpoint(args.checkpoint)
    data = load_split(args.dataset, args.dump, args.split, model.cfg.dims)
    m = evaluate(model, data)
    text = json.dumps(m, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    summary = {k: m[k] for k in ("accuracy", "precision", "recall", "f1", "auc")}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "estimate": cmd_estimate,
    "report-cdf": cmd_report_cdf,
    "train": cmd_train,
    "eval": cmd_eval,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--workers", type=int, help="worker threads")
    common.add_argument("--out", help="output path")
    common.add_argument("--dims", type=int, help="number of ECUs / MDHP dimensions")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="mdhp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"mdhp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a labeled window dataset")
    g.add_argument("--count", type=int, help="windows per scenario")
    g.add_argument("--scenario", type=int, choices=range(9), metavar="0..8", help="single scenario row")

    e = sub.add_parser("estimate", parents=[common], help="fit MDHP parameters per window")
    e.add_argument("dataset", help="dataset directory or split file")

    r = sub.add_parser("report-cdf", parents=[common], help="per-label CDFs of fitted parameters")
    r.add_argument("dump", help="parameter dump from estimate")
    r.add_argument("--pair", type=int, nargs=2, metavar=("I", "J"), help="dimension pair")

    t = sub.add_parser("train", parents=[common], help="train the MDHP-LSTM classifier")
    t.add_argument("dataset")
    t.add_argument("--dump", help="parameter dump from estimate")
    t.add_argument("--epochs", type=int, help="override max_epoch")

    v = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    v.add_argument("dataset")
    v.add_argument("--dump", help="parameter dump from estimate")
    v.add_argument("--checkpoint", help="checkpoint path")
    v.add_argument("--split", default="val", choices=SPLITS)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, DatasetError, SingleClassError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, DegenerateWindowError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
