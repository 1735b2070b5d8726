"""Command-line front end: ``synth``, ``run``, ``compare`` and ``gridsearch``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import dump_config, load_config
from .data import SyntheticSpec, generate_synthetic, load_csv, write_csv
from .exceptions import ConfigurationError, DataError, TrainingError
from .experiments import compare_methods, cross_validate, grid_search_alpha, method_config
from .inference import PiTriple, write_predictions
from .metrics import METRIC_NAMES, write_comparison_csv

log = logging.getLogger("dualaqd")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


# -- output helpers ------------------------------------------------------------

def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n",
                    encoding="utf-8")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _experiment_id(command, config, fingerprint, extra=""):
    h = hashlib.sha256(f"{command}|{json.dumps(config.to_dict(), sort_keys=True)}|"
                       f"{fingerprint}|{extra}".encode())
    return h.hexdigest()[:16]


def _write_fold_metrics(path, results):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "fold", *METRIC_NAMES])
        for name, res in results.items():
            for o in res.folds:
                w.writerow([name, o.fold] + [repr(o.values[k]) if k in o.values else ""
                                             for k in METRIC_NAMES])


def _write_lambda_trace(path, result):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "epoch", "picp_train", "cost", "lambda"])
        for o in result.folds:
            if o.lambda_trace is None:
                continue
            for row in o.lambda_trace.rows():
                w.writerow([o.fold, row["epoch"], repr(row["picp_train"]),
                            repr(row["cost"]), repr(row["lambda"])])


def _first_repetition(result, n):
    """Out-of-fold triple covering every sample once (folds of the first repetition)."""
    y_bar, y_u, y_l = np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan)
    seen = np.zeros(n, dtype=bool)
    for o in result.folds:
        if seen[o.val_idx].any():
            break
        y_bar[o.val_idx], y_u[o.val_idx], y_l[o.val_idx] = o.triple.y_bar, o.triple.y_u_bar, o.triple.y_l_bar
        seen[o.val_idx] = True
    ids = np.flatnonzero(seen)
    return ids, PiTriple(y_bar[ids], y_u[ids], y_l[ids])


def _write_plotdata(path, dataset, ids, triple):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["x", "y", "y_hat", "y_l", "y_u"]
        if dataset.has_ideal_bounds:
            header += ["ideal_lower", "ideal_upper"]
        w.writerow(header)
        for j, i in enumerate(ids):
            row = [dataset.X[i, 0], dataset.y[i], triple.y_bar[j], triple.y_l_bar[j], triple.y_u_bar[j]]
            if dataset.has_ideal_bounds:
                row += [dataset.ideal_lower[i], dataset.ideal_upper[i]]
            w.writerow([repr(float(v)) for v in row])


def _fold_details(result):
    out = []
    for o in result.folds:
        d = {"fold": o.fold, "metrics": o.values, "chosen_epoch": o.best_epoch}
        if o.sigma2_noise is not None:
            d["sigma2_noise"] = o.sigma2_noise
        if o.records:
            lam = o.lambda_trace.lam if o.lambda_trace is not None else None
            pt = o.lambda_trace.picp_train if o.lambda_trace is not None else None
            d["epochs"] = [{"epoch": r.epoch, "picp_val": r.picp_val, "mpiw_val": r.mpiw_val,
                            **({"lambda": lam[r.epoch], "picp_train": pt[r.epoch]} if lam else {})}
                           for r in o.records]
        out.append(d)
    return out


# -- commands --------------------------------------------------------------------

def _overrides(args):
    ov = dict(kv.split("=", 1) for kv in (args.set or []))
    if getattr(args, "seed", None) is not None:
        ov["seed"] = args.seed
    if getattr(args, "alpha", None) is not None and args.command == "run":
        ov["alpha"] = args.alpha
    return ov


def cmd_synth(args):
    spec = SyntheticSpec(n_points=args.n_points, seed=args.seed or 0)
    out = Path(args.out)
    try:
        write_csv(generate_synthetic(spec), out)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc}") from exc
    print(f"wrote {spec.n_points} rows to {out}")


def _prepare(args):
    config, settings = load_config(args.config, _overrides(args))
    dataset = load_csv(args.data, settings["target_column"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return config, settings, dataset, out


def cmd_run(args):
    config, settings, dataset, out = _prepare(args)
    method = args.method
    if method is None:
        method = config.loss_kind
        if method == "dualaqd" and not config.batch_sorting:
            method = "dualaqd_nobs"
    cfg = method_config(config, method)
    t0 = time.perf_counter()
    result = cross_validate(dataset, cfg, jobs=args.jobs)
    wall = time.perf_counter() - t0

    _write_fold_metrics(out / "metrics.csv", {method: result})
    ids, triple = _first_repetition(result, len(dataset))
    write_predictions(out / "predictions.csv", triple, dataset.y[ids], ids)
    _write_plotdata(out / "plotdata.csv", dataset, ids, triple)
    _write_lambda_trace(out / "lambda_trace.csv", result)
    manifest = {
        "experiment_id": _experiment_id("run", cfg, dataset.fingerprint(), method),
        "command": "run",
        "version": __version__,
        "method": method,
        "config": cfg.to_dict(),
        "dataset": {"path": str(args.data), "fingerprint": dataset.fingerprint(),
                    "rows": len(dataset), "features": dataset.feature_names},
        "seed": cfg.seed,
        "report": result.report.to_dict(),
        "folds": _fold_details(result),
        "artifacts": ["manifest.json", "metrics.csv", "predictions.csv", "plotdata.csv",
                      "lambda_trace.csv"],
        "wall_time_s": wall,
    }
    if method == "mcdropout_pi":
        manifest["sigma2_noise"] = [o.sigma2_noise for o in result.folds]
    _write_json(out / "manifest.json", manifest)
    (out / "config.txt").write_text(dump_config(cfg), encoding="utf-8")
    _print_summary({method: result})


def cmd_compare(args):
    config, settings, dataset, out = _prepare(args)
    methods = _split_list(args.method) or settings["methods"]
    for m in methods:
        method_config(config, m)  # validate names before any training
    t0 = time.perf_counter()
    results, winner, tests = compare_methods(dataset, config, methods, jobs=args.jobs)
    wall = time.perf_counter() - t0

    write_comparison_csv([r.report for r in results.values()], out / "metrics.csv")
    _write_fold_metrics(out / "metrics_folds.csv", results)
    manifest = {
        "experiment_id": _experiment_id("compare", config, dataset.fingerprint(), ",".join(methods)),
        "command": "compare",
        "version": __version__,
        "methods": methods,
        "config": config.to_dict(),
        "dataset": {"path": str(args.data), "fingerprint": dataset.fingerprint(),
                    "rows": len(dataset)},
        "seed": config.seed,
        "reports": {n: r.report.to_dict() for n, r in results.items()},
        "mpiw_winner": winner,
        "paired_t_tests": {n: {"statistic": t.statistic, "p_value": t.p_value,
                               "significant": t.significant} for n, t in tests.items()},
        "artifacts": ["manifest.json", "metrics.csv", "metrics_folds.csv"],
        "wall_time_s": wall,
    }
    _write_json(out / "manifest.json", manifest)
    _print_summary(results)


def cmd_gridsearch(args):
    config, settings, dataset, out = _prepare(args)
    alphas = [float(a) for a in _split_list(args.alpha)] if args.alpha else settings["alphas"]
    if not alphas:
        raise ConfigurationError("gridsearch needs at least one alpha")
    t0 = time.perf_counter()
    gs = grid_search_alpha(dataset, config, alphas, jobs=args.jobs)
    wall = time.perf_counter() - t0

    with (out / "metrics.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "mse_mean", "mpiw_mean", "mpiw_std", "picp_mean", "picp_std"])
        for a, r in gs.results.items():
            rep = r.report
            w.writerow([repr(a), repr(rep.mean("mse")), repr(rep.mean("mpiw")), repr(rep.std("mpiw")),
                        repr(rep.mean("picp")), repr(rep.std("picp"))])
    manifest = {
        "experiment_id": _experiment_id("gridsearch", config, dataset.fingerprint(),
                                        ",".join(map(repr, alphas))),
        "command": "gridsearch",
        "version": __version__,
        "alphas": alphas,
        "best_alpha": gs.best_alpha,
        "config": config.to_dict(),
        "dataset": {"path": str(args.data), "fingerprint": dataset.fingerprint()},
        "seed": config.seed,
        "reports": {repr(a): r.report.to_dict() for a, r in gs.results.items()},
        "artifacts": ["manifest.json", "metrics.csv"],
        "wall_time_s": wall,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"best alpha: {gs.best_alpha}")


def _split_list(values):
    out = []
    for v in values or []:
        out += [s.strip() for s in str(v).split(",") if s.strip()]
    return out


def _print_summary(results):
    for name, r in results.items():
        parts = [f"{k}={r.report.mean(k):.4g}±{r.report.std(k):.3g}"
                 for k in METRIC_NAMES if r.report.folds[k]]
        print(f"{name}: " + "  ".join(parts))


# -- entry point -----------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="dualaqd", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log per-fold progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write the heteroscedastic sinusoid dataset as CSV")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-points", type=int, default=1000)

    for name, help_ in (("run", "cross-validate one method and write all artifacts"),
                        ("compare", "cross-validate several methods on shared folds"),
                        ("gridsearch", "grid search over the lambda learning rate alpha")):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--config", help="key=value config file")
        c.add_argument("--data", required=True, help="CSV with a header row")
        c.add_argument("--out", required=True, help="output directory")
        c.add_argument("--seed", type=int)
        c.add_argument("--jobs", type=int, default=1, help="folds trained in parallel")
        c.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        if name == "run":
            c.add_argument("--method", help="dualaqd, dualaqd_nobs, qd, qdplus or mcdropout_pi")
            c.add_argument("--alpha", type=float)
        elif name == "compare":
            c.add_argument("--method", action="append", help="method name(s), comma separated")
        else:
            c.add_argument("--alpha", action="append", help="alpha value(s), comma separated")
    return p


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "compare": cmd_compare, "gridsearch": cmd_gridsearch}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "set", None):
        bad = [kv for kv in args.set if "=" not in kv]
        if bad:
            print(f"config error: --set expects KEY=VALUE, got {bad}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
