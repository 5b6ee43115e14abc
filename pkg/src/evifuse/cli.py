"""Command-line entry point.

Exit codes: 0 success, 1 check failure, 2 usage or input error,
3 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .config import RunConfig, load_config
from .errors import DivergenceError, DomainError, InvalidInputError
from .gradcheck import END_TO_END_TOL, MODULE_TOL, gradcheck_end_to_end, gradcheck_modules
from .metrics import evaluate
from .nig import NIGParams, aleatoric, epistemic, nig_fuse, predictive_interval
from .scorer import TinyScorer, load_scorer, save_scorer
from .synth import Dataset, generate_dataset, read_dataset_csv, write_dataset_csv
from .train import HISTORY_FIELDS, train

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _nig(text: str) -> NIGParams:
    try:
        values = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None
    if len(values) != 4:
        raise argparse.ArgumentTypeError("expected delta,v,alpha,beta")
    try:
        return NIGParams(*values)
    except InvalidInputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _config(args) -> RunConfig:
    return load_config(args.config, seed=args.seed, out=args.out)


def _path(cfg: RunConfig, given, default_name):
    return given if given is not None else os.path.join(cfg.out, default_name)


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(parent, exist_ok=True)
    except OSError as exc:
        raise InvalidInputError(f"cannot create {parent}: {exc.strerror}") from exc


def _read_dataset(path, cfg: RunConfig) -> Dataset:
    if not os.path.exists(path):
        raise InvalidInputError(f"dataset not found: {path}")
    return read_dataset_csv(path, cfg.n_scene, cfg.n_distortion)


def _split(data: Dataset, cfg: RunConfig):
    if cfg.val_fraction == 0:
        return data, None
    return data.split(cfg.val_fraction, seed=cfg.seed)


def _fmt(x) -> str:
    return f"{float(x):.10g}"


def _fmt_nig(p: NIGParams) -> str:
    return "(" + ", ".join(_fmt(x) for x in p.astuple()) + ")"


def cmd_datagen(args) -> int:
    cfg = _config(args)
    path = _path(cfg, args.dataset, "dataset.csv")
    _ensure_parent(path)
    data = generate_dataset(cfg.synth())
    try:
        write_dataset_csv(data, path)
    except OSError as exc:
        raise InvalidInputError(f"cannot write {path}: {exc.strerror}") from exc
    print(f"wrote {len(data)} samples to {path}")
    return EXIT_OK


def write_history(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_FIELDS)
        for row in history:
            w.writerow([row["epoch"]] + [repr(float(row[k])) for k in HISTORY_FIELDS[1:]])


def cmd_train(args) -> int:
    cfg = _config(args)
    data = _read_dataset(_path(cfg, args.dataset, "dataset.csv"), cfg)
    train_data, val_data = _split(data, cfg)
    model_path = _path(cfg, args.model, "model.txt")
    history_path = os.path.join(cfg.out, "history.csv")
    _ensure_parent(model_path)
    _ensure_parent(history_path)
    try:
        scorer, history = train(train_data, cfg.fusion(), cfg.train(), val_data)
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        if exc.report is not None:
            for k, v in exc.report.as_row().items():
                print(f"  {k}={v!r}", file=sys.stderr)
        return EXIT_DIVERGED
    save_scorer(scorer, model_path)
    write_history(history, history_path)
    last = history[-1]
    print(f"trained {cfg.epochs} epochs: total={last['total']:.6f} val_srcc={last['val_srcc']:.4f}")
    print(f"model: {model_path}\nhistory: {history_path}")
    return EXIT_OK


def _check_compatible(scorer: TinyScorer, data: Dataset):
    if scorer.feature_dim != data.feature_dim:
        raise InvalidInputError(
            f"model expects {scorer.feature_dim} features, dataset has {data.feature_dim}")
    if (scorer.n_scene, scorer.n_distortion) != (data.n_scene, data.n_distortion):
        raise InvalidInputError(
            f"model has {scorer.n_scene} scenes / {scorer.n_distortion} distortions, "
            f"dataset has {data.n_scene} / {data.n_distortion}")


def cmd_eval(args) -> int:
    cfg = _config(args)
    model_path = _path(cfg, args.model, "model.txt")
    if not os.path.exists(model_path):
        raise InvalidInputError(f"model not found: {model_path}")
    scorer = load_scorer(model_path)
    data = _read_dataset(_path(cfg, args.dataset, "dataset.csv"), cfg)
    _check_compatible(scorer, data)
    if args.holdout:
        _, held = _split(data, cfg)
        data = held if held is not None else data
    report = evaluate(scorer, data, cfg.fusion())
    # an untrained scorer with the same seed gives the chance-level reference
    baseline = TinyScorer.init(scorer.feature_dim, scorer.n_scene, scorer.n_distortion,
                               np.random.default_rng(cfg.seed))
    base = evaluate(baseline, data, cfg.fusion(), with_intervals=False)
    text = report.to_text() + f"baseline_srcc={base.srcc!r}\nbaseline_plcc={base.plcc!r}\n"
    out_path = os.path.join(cfg.out, "metrics.txt")
    _ensure_parent(out_path)
    with open(out_path, "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    cfg = _config(args)
    seed = cfg.seed % 2**32
    modules = gradcheck_modules(seed=seed, corrupt=args.corrupt)
    e2e = gradcheck_end_to_end(seed=seed, corrupt=args.corrupt, fusion_cfg=cfg.fusion())
    ok = True
    print("group\tmax_rel_error\ttolerance\tstatus")
    for group, tol in ((modules, args.module_tol), (e2e, args.e2e_tol)):
        for name, err in group.items():
            passed = err < tol
            ok &= passed
            print(f"{name}\t{err:.3e}\t{tol:.0e}\t{'pass' if passed else 'FAIL'}")
    print("gradcheck " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_fusedemo(args) -> int:
    params = args.nig or []
    if not params:
        raise InvalidInputError("give at least one --nig delta,v,alpha,beta")
    acc = params[0]
    print(f"input 1: {_fmt_nig(acc)}")
    for k, p in enumerate(params[1:], 2):
        print(f"input {k}: {_fmt_nig(p)}")
        fused = nig_fuse(acc, p)
        print(f"step {k - 1}: {_fmt_nig(acc)} + {_fmt_nig(p)} -> {_fmt_nig(fused)}")
        acc = fused
    lo, hi = predictive_interval(acc, args.coverage)
    print(f"fused: {_fmt_nig(acc)}")
    print(f"aleatoric: {_fmt(aleatoric(acc))}")
    print(f"epistemic: {_fmt(epistemic(acc))}")
    print(f"{args.coverage:.0%} interval: [{_fmt(lo)}, {_fmt(hi)}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evifuse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=False, model=False):
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--seed", type=_u64, metavar="U64", help="override the config seed")
        p.add_argument("--out", metavar="DIR", help="output directory (default: out)")
        if dataset:
            p.add_argument("--dataset", metavar="PATH", help="dataset CSV (default: OUT/dataset.csv)")
        if model:
            p.add_argument("--model", metavar="PATH", help="model file (default: OUT/model.txt)")
        return p

    common(sub.add_parser("datagen", help="generate the synthetic dataset"),
           dataset=True).set_defaults(func=cmd_datagen)
    common(sub.add_parser("train", help="train a scorer"),
           dataset=True, model=True).set_defaults(func=cmd_train)
    p = common(sub.add_parser("eval", help="evaluate a trained scorer"), dataset=True, model=True)
    p.add_argument("--holdout", action="store_true",
                   help="evaluate only the validation split used during training")
    p.set_defaults(func=cmd_eval)
    p = common(sub.add_parser("gradcheck", help="finite-difference gradient checks"))
    p.add_argument("--corrupt", action="store_true", help="scale analytic gradients by 1.5")
    p.add_argument("--module-tol", type=float, default=MODULE_TOL)
    p.add_argument("--e2e-tol", type=float, default=END_TO_END_TOL)
    p.set_defaults(func=cmd_gradcheck)
    p = sub.add_parser("fusedemo", help="trace the fusion of NIG parameter tuples")
    p.add_argument("--nig", type=_nig, action="append", metavar="D,V,A,B")
    p.add_argument("--coverage", type=float, default=0.95)
    p.set_defaults(func=cmd_fusedemo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InvalidInputError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
