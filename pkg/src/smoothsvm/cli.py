"""Command-line surface: train / predict / eval plus the batch experiment
protocols (cross-validation, smoothing-scale sweep, solver-loss comparison).

Reports are JSON or CSV with fixed schemas; every emitted number except wall
time is fully determined by (command, files, flags, seed). Data paths that do
not exist as given are also tried under $SMOOTHSVM_DATA_DIR.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from .data import Dataset, SplitPlan, accuracy, kfold_split, parse_libsvm
from .errors import SmoothSvmError
from .losses import Family, LossSpec, make_loss
from .objective import Objective
from .solvers import (InverseT, PegasosRate, SgdConfig, TronConfig, XiFixed,
                      XiGradientScaled, fgd_train, pegasos_train, sgd_train,
                      tron_train)

# smoothing scales of the sweep protocol: four coarse points, then every
# integer power of two from 2^-10 up to 2^5
DEFAULT_SIGMA_GRID = [2.0**k for k in (-30, -25, -20, -15)] + [2.0**k for k in range(-10, 6)]

_SOLVERS = ("tron", "fgd", "sgd", "pegasos")


class UsageError(SmoothSvmError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for usage errors, not argparse's 2
        raise UsageError(message)


def _add_loss_options(p):
    p.add_argument("--loss", default="smooth-hinge-g",
                   choices=sorted(f.value for f in Family if f is not Family.CUSTOM))
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--abs-rescale", action="store_true",
                   help="rescale the smooth absolute loss by 2/pi")


def _add_solver_options(p):
    p.add_argument("--lambda", dest="lam", type=float, default=1e-5)
    p.add_argument("--solver", default="tron", choices=_SOLVERS)
    p.add_argument("--tol", type=float, default=5e-4)
    p.add_argument("--xi", type=float, default=0.1)
    p.add_argument("--kappa", type=float, default=None,
                   help="use the gradient-scaled CG forcing xi_t = min(xi, kappa*||g||)")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)


def _add_output_options(p):
    p.add_argument("--format", default="json", choices=("json", "csv"))
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smoothsvm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a linear classifier")
    p.add_argument("--data", required=True)
    _add_loss_options(p)
    _add_solver_options(p)
    _add_output_options(p)
    p.add_argument("--report", default=None, help="report path (default: <out>.report.<fmt>)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write one +-1 label per instance")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="print accuracy of a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cv", help="k-fold cross-validation protocol")
    p.add_argument("--data", required=True)
    _add_loss_options(p)
    _add_solver_options(p)
    _add_output_options(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--reps", type=int, default=4)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("sweep-sigma", aliases=["sweep_sigma"],
                       help="cross-validate over a grid of smoothing scales")
    p.add_argument("--data", required=True)
    _add_loss_options(p)
    _add_solver_options(p)
    _add_output_options(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--reps", type=int, default=4)
    p.add_argument("--sigma-grid", default=None,
                   help="comma-separated sigma values (default: the standard grid)")
    p.set_defaults(func=cmd_sweep_sigma)

    p = sub.add_parser("compare", help="cross-validate a matrix of solver:loss pairs")
    p.add_argument("--data", required=True)
    _add_loss_options(p)
    _add_solver_options(p)
    _add_output_options(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--reps", type=int, default=4)
    p.add_argument("--pairs", required=True,
                   help="comma-separated solver:loss pairs, e.g. tron:logistic,pegasos:hinge")
    p.set_defaults(func=cmd_compare)

    return parser


# ----------------------------------------------------------------------
# configuration plumbing


def resolve_data_path(path: str) -> str:
    if os.path.exists(path):
        return path
    root = os.environ.get("SMOOTHSVM_DATA_DIR")
    if root and not os.path.isabs(path):
        candidate = os.path.join(root, path)
        if os.path.exists(candidate):
            return candidate
    raise UsageError(f"dataset not found: {path}")


def _load_dataset(path: str, n_features=None) -> Dataset:
    with open(resolve_data_path(path), "r", encoding="utf-8") as fh:
        return parse_libsvm(fh, n_features=n_features)


def _loss_from_args(args, sigma=None) -> LossSpec:
    scale = 2.0 / math.pi if getattr(args, "abs_rescale", False) else 1.0
    if scale != 1.0 and args.loss != Family.SMOOTH_ABS.value:
        raise UsageError("--abs-rescale only applies to --loss smooth-abs")
    return make_loss(args.loss, theta=args.theta,
                     sigma=args.sigma if sigma is None else sigma,
                     gamma=args.gamma, bandwidth=args.bandwidth, scale=scale)


def validate_combo(solver: str, loss: LossSpec) -> None:
    """Reject inconsistent solver/loss pairs before any work happens."""
    fam = loss.family
    if solver == "pegasos" and fam is not Family.HINGE:
        raise UsageError("pegasos requires --loss hinge")
    if fam is Family.HINGE and solver != "pegasos":
        raise UsageError("the hinge loss is not differentiable; use --solver pegasos")
    if solver == "tron" and fam is Family.WANG_KH:
        raise UsageError("tron needs a convex Hessian; the kernel-smoothed hinge is not convex")


def _tron_config(args) -> TronConfig:
    policy = XiFixed(args.xi) if args.kappa is None else XiGradientScaled(args.kappa, cap=args.xi)
    return TronConfig(tol=args.tol, max_newton_iters=args.max_iter, xi_policy=policy)


def _train_once(dataset: Dataset, loss: LossSpec, args, seed: int):
    obj = Objective(dataset, args.lam, loss)
    if args.solver == "tron":
        return tron_train(obj, _tron_config(args))
    if args.solver == "fgd":
        return fgd_train(obj, args.step, args.max_iter)
    if args.solver == "sgd":
        return sgd_train(obj, SgdConfig(args.epochs, InverseT(args.step), seed))
    return pegasos_train(obj, SgdConfig(args.epochs, PegasosRate(), seed))


def _loss_meta(loss: LossSpec) -> dict:
    return {
        "family": loss.family.value,
        "theta": loss.theta,
        "sigma": loss.sigma,
        "gamma": loss.gamma,
        "bandwidth": loss.bandwidth,
        "scale": loss.scale,
    }


def _run_seed(seed: int, rep: int, fold: int) -> int:
    return seed * 1_000_003 + rep * 101 + fold


def _nan_to_none(x: float):
    return None if isinstance(x, float) and math.isnan(x) else x


def _protocol_records(dataset, plan, loss, args):
    """One record per (repetition, fold); canonical report order is fold-major."""
    pairs = kfold_split(dataset, plan)
    records = []
    for run, (train_idx, test_idx) in enumerate(pairs):
        rep, fold = divmod(run, plan.folds)
        seed = _run_seed(plan.seed, rep, fold)
        train_set = dataset.subset(train_idx)
        test_set = dataset.subset(test_idx)
        report = _train_once(train_set, loss, args, seed)
        records.append({
            "fold": fold,
            "repetition": rep,
            "seed": seed,
            "accuracy": accuracy(report.weights, test_set),
            "wall_time_seconds": report.wall_time_seconds,
            "iterations": report.iterations,
            "final_grad_norm": _nan_to_none(report.final_grad_norm),
        })
    records.sort(key=lambda r: (r["fold"], r["repetition"]))
    return records


def _aggregate(records) -> dict:
    acc = np.array([r["accuracy"] for r in records], dtype=float)
    wall = np.array([r["wall_time_seconds"] for r in records], dtype=float)
    std = float(acc.std(ddof=1)) if acc.size > 1 else 0.0
    return {
        "runs": len(records),
        "accuracy_mean": float(acc.mean()),
        "accuracy_std": std,
        "wall_time_mean": float(wall.mean()),
        "wall_time_total": float(wall.sum()),
    }


# ----------------------------------------------------------------------
# output writers

_RECORD_COLUMNS = ["kind", "sigma", "fold", "repetition", "seed", "accuracy",
                   "wall_time_seconds", "iterations", "final_grad_norm"]


def _emit(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _records_csv(blocks) -> str:
    """blocks: list of (sigma_or_None, records, aggregates) -> fixed-column CSV."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_RECORD_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for sigma, records, agg in blocks:
        for r in records:
            writer.writerow({"kind": "record", "sigma": sigma, **r})
        for kind in ("mean", "std"):
            writer.writerow({
                "kind": kind, "sigma": sigma,
                "accuracy": agg["accuracy_mean" if kind == "mean" else "accuracy_std"],
                "wall_time_seconds": agg["wall_time_mean"] if kind == "mean" else "",
            })
    return buf.getvalue()


# ----------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    loss = _loss_from_args(args)
    validate_combo(args.solver, loss)
    if args.out is None:
        raise UsageError("train requires --out for the model file")
    dataset = _load_dataset(args.data)
    report = _train_once(dataset, loss, args, args.seed)
    model = {
        "format": "smoothsvm-model",
        "version": 1,
        "n_features": dataset.p,
        "lambda": args.lam,
        "loss": _loss_meta(loss),
        "weights": [float(x) for x in report.weights],
    }
    _emit(_json_text(model), args.out)
    report_path = args.report or f"{args.out}.report.{args.format}"
    summary = {
        "command": "train",
        "solver": args.solver,
        "loss": _loss_meta(loss),
        "lambda": args.lam,
        "seed": args.seed,
        "converged": report.converged,
        "iterations": report.iterations,
        "final_grad_norm": _nan_to_none(report.final_grad_norm),
        "final_objective": Objective(dataset, args.lam, loss).value(report.weights),
        "wall_time_seconds": report.wall_time_seconds,
        "traces": {
            "grad_norm": [float(x) for x in report.grad_norm_trace],
            "objective": [float(x) for x in report.objective_trace],
            "cg_iters": [int(x) for x in report.cg_iters_trace],
            "radius": [float(x) for x in report.radius_trace],
        },
    }
    if args.format == "json":
        _emit(_json_text(summary), report_path)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "grad_norm", "objective", "cg_iters", "radius"])
        for i in range(report.iterations):
            writer.writerow([i + 1, report.grad_norm_trace[i], report.objective_trace[i],
                             report.cg_iters_trace[i], report.radius_trace[i]])
        _emit(buf.getvalue(), report_path)
    print(f"converged={report.converged} iterations={report.iterations} "
          f"final_grad_norm={report.final_grad_norm:.6e}")
    return 0 if report.converged else 2


def _load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        model = json.load(fh)
    w = np.asarray(model["weights"], dtype=float)
    return model, w


def cmd_predict(args) -> int:
    model, w = _load_model(args.model)
    dataset = _load_dataset(args.data, n_features=model["n_features"])
    pred = np.where(dataset.features.matvec(w) > 0.0, 1, -1)
    text = "".join("+1\n" if y > 0 else "-1\n" for y in pred)
    _emit(text, args.out)
    return 0


def cmd_eval(args) -> int:
    model, w = _load_model(args.model)
    dataset = _load_dataset(args.data, n_features=model["n_features"])
    print(accuracy(w, dataset))
    return 0


def cmd_cv(args) -> int:
    loss = _loss_from_args(args)
    validate_combo(args.solver, loss)
    dataset = _load_dataset(args.data)
    plan = SplitPlan(folds=args.folds, repetitions=args.reps, seed=args.seed)
    records = _protocol_records(dataset, plan, loss, args)
    agg = _aggregate(records)
    if args.format == "json":
        payload = {
            "command": "cv", "solver": args.solver, "loss": _loss_meta(loss),
            "lambda": args.lam,
            "protocol": {"folds": plan.folds, "repetitions": plan.repetitions, "seed": plan.seed},
            "records": records, "aggregates": agg,
        }
        _emit(_json_text(payload), args.out)
    else:
        _emit(_records_csv([(None, records, agg)]), args.out)
    return 0


def _sigma_grid(args):
    if args.sigma_grid is None:
        return list(DEFAULT_SIGMA_GRID)
    try:
        grid = [float(tok) for tok in args.sigma_grid.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"bad --sigma-grid: {args.sigma_grid!r}") from None
    if not grid:
        raise UsageError("--sigma-grid must contain at least one value")
    return grid


def cmd_sweep_sigma(args) -> int:
    grid = _sigma_grid(args)
    dataset = _load_dataset(args.data)
    plan = SplitPlan(folds=args.folds, repetitions=args.reps, seed=args.seed)
    blocks = []
    for sigma in grid:
        loss = _loss_from_args(args, sigma=sigma)
        validate_combo(args.solver, loss)
        records = _protocol_records(dataset, plan, loss, args)
        blocks.append((sigma, records, _aggregate(records)))
    if args.format == "json":
        payload = {
            "command": "sweep_sigma", "solver": args.solver,
            "loss_family": args.loss, "lambda": args.lam,
            "protocol": {"folds": plan.folds, "repetitions": plan.repetitions, "seed": plan.seed},
            "blocks": [{"sigma": s, "records": r, "aggregates": a} for s, r, a in blocks],
        }
        _emit(_json_text(payload), args.out)
    else:
        _emit(_records_csv(blocks), args.out)
    return 0


def cmd_compare(args) -> int:
    pairs = []
    for tok in args.pairs.split(","):
        tok = tok.strip()
        if not tok:
            continue
        solver, sep, loss_name = tok.partition(":")
        if not sep:
            raise UsageError(f"bad pair {tok!r}; expected solver:loss")
        pairs.append((solver, loss_name))
    if not pairs:
        raise UsageError("--pairs must list at least one solver:loss pair")
    dataset = _load_dataset(args.data)
    plan = SplitPlan(folds=args.folds, repetitions=args.reps, seed=args.seed)
    rows = []
    for solver, loss_name in pairs:
        row = {"solver": solver, "loss": loss_name}
        try:
            if solver not in _SOLVERS:
                raise UsageError(f"unknown solver {solver!r}")
            loss = make_loss(loss_name, theta=args.theta, sigma=args.sigma,
                             gamma=args.gamma, bandwidth=args.bandwidth)
            validate_combo(solver, loss)
        except (SmoothSvmError, ValueError) as exc:
            print(f"warning: skipping {solver}:{loss_name}: {exc}", file=sys.stderr)
            row.update({"status": "skipped", "warning": str(exc)})
            rows.append(row)
            continue
        sub_args = argparse.Namespace(**vars(args))
        sub_args.solver = solver
        records = _protocol_records(dataset, plan, loss, sub_args)
        row.update({"status": "ok", "warning": "", "records": records, **_aggregate(records)})
        rows.append(row)
    if args.format == "json":
        payload = {
            "command": "compare", "lambda": args.lam,
            "protocol": {"folds": plan.folds, "repetitions": plan.repetitions, "seed": plan.seed},
            "rows": rows,
        }
        _emit(_json_text(payload), args.out)
    else:
        columns = ["solver", "loss", "status", "runs", "accuracy_mean", "accuracy_std",
                   "wall_time_mean", "wall_time_total", "warning"]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        _emit(buf.getvalue(), args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SmoothSvmError, OSError, ValueError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
