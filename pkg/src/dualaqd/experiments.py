"""Cross-validated comparison of interval methods.

Within a fold every method shares one trained point network, so paired
comparisons differ only in how the interval is produced.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .data import make_folds, split_dataset
from .exceptions import ConfigurationError
from .inference import denormalize_triple, mc_aggregate, mc_aggregate_ensemble, mcdropout_pi, noise_variance
from .training import SolutionRecord, select_solution, train_pi_network, train_point_network

log = logging.getLogger(__name__)

METHODS = ("dualaqd", "dualaqd_nobs", "qd", "qdplus", "mcdropout_pi")
DEFAULT_ALPHAS = (0.001, 0.005, 0.01, 0.05, 0.1)


def method_config(config, method):
    """TrainConfig for a named method, derived from ``config``."""
    if method == "dualaqd":
        return config.replace(loss_kind="dualaqd", batch_sorting=True)
    if method == "dualaqd_nobs":
        return config.replace(loss_kind="dualaqd", batch_sorting=False)
    if method in ("qd", "qdplus", "mcdropout_pi"):
        return config.replace(loss_kind=method, batch_sorting=True)
    raise ConfigurationError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


@dataclass
class FoldOutcome:
    fold: int
    val_idx: np.ndarray
    values: dict  # metric name -> float
    triple: object  # PiTriple in original units
    best_epoch: int | None = None
    records: list = field(default_factory=list)
    lambda_trace: object = None
    sigma2_noise: float | None = None


@dataclass
class CVResult:
    name: str
    report: metrics.MetricReport
    folds: list

    def summary(self):
        return {k: (self.report.mean(k), self.report.std(k)) for k in metrics.METRIC_NAMES
                if self.report.folds[k]}


def _fold_metrics(triple, split):
    y = split.y_val_raw
    values = {
        "mse": metrics.mse(triple.y_bar, y),
        "mpiw": metrics.mpiw(triple.y_u_bar, triple.y_l_bar),
        "picp": metrics.picp(y, triple.y_l_bar, triple.y_u_bar, triple.y_bar),
    }
    if split.ideal_val is not None:
        lower, upper = split.ideal_val
        values["pi_delta"] = metrics.pi_delta(triple.y_u_bar, triple.y_l_bar, upper, lower)
    return values


def _run_variant(name, cfg, split, f, fold_seed):
    ts = split.target_stats
    common = dict(X_val=split.X_val, y_val=split.y_val, target_scale=ts.scale)
    if cfg.loss_kind == "mcdropout_pi":
        s2 = noise_variance(f, split.X_val, split.y_val, cfg.mc_passes, fold_seed)
        triple = mcdropout_pi(f, split.X_val, cfg.mc_passes, s2, cfg.tau, fold_seed)
        return FoldOutcome(-1, split.val_idx, {}, denormalize_triple(triple, ts),
                           sigma2_noise=s2 * ts.scale ** 2)
    if cfg.loss_kind == "dualaqd":
        res = train_pi_network(split.X_train, split.y_train, f, cfg,
                               np.random.default_rng([fold_seed, 2]), **common)
        triple = mc_aggregate(f, res.model, split.X_val, cfg.mc_passes, fold_seed)
        return FoldOutcome(-1, split.val_idx, {}, denormalize_triple(triple, ts),
                           res.best.epoch, _strip(res.records), res.lambda_trace)
    members, epochs = [], []
    for m in range(cfg.ensemble_size):
        res = train_pi_network(split.X_train, split.y_train, f, cfg,
                               np.random.default_rng([fold_seed, 3, m]), **common)
        members.append(res.model)
        epochs.append(res.best.epoch)
    triple = mc_aggregate_ensemble(members, split.X_val)
    return FoldOutcome(-1, split.val_idx, {}, denormalize_triple(triple, ts), epochs[0])


def _strip(records):
    return [SolutionRecord(r.epoch, r.picp_val, r.mpiw_val) for r in records]


def run_fold(dataset, train_idx, val_idx, config, variants, fold, fold_seed):
    """Train the point network once, then every variant; returns name -> FoldOutcome."""
    split = split_dataset(dataset, train_idx, val_idx, config.target_scaling)
    if len(train_idx) < config.batch_size or len(val_idx) < 1:
        raise ConfigurationError(
            f"fold {fold}: {len(train_idx)} training rows cannot fill a batch of {config.batch_size}")
    f, _ = train_point_network(split.X_train, split.y_train, config,
                               np.random.default_rng([fold_seed, 1]), split.X_val, split.y_val)
    out = {}
    for name, cfg in variants.items():
        outcome = _run_variant(name, cfg, split, f, fold_seed)
        outcome.fold = fold
        outcome.values = _fold_metrics(outcome.triple, split)
        out[name] = outcome
        log.info("fold %d %s: %s", fold, name,
                 ", ".join(f"{k}={v:.4g}" for k, v in outcome.values.items()))
    return out


def _run_fold_job(args):
    return run_fold(*args)


def cross_validate_methods(dataset, config, variants, jobs=1, folds=None):
    """Cross-validate several named config variants on shared folds.

    ``variants`` maps a name to a TrainConfig (or is a list of method names
    resolved with :func:`method_config`). Fold ``i`` uses seed ``seed ^ i``.
    """
    if not isinstance(variants, dict):
        variants = {m: method_config(config, m) for m in variants}
    if not variants:
        raise ConfigurationError("no methods to evaluate")
    n = len(dataset)
    if n < 2 * config.batch_size:
        raise ConfigurationError(f"dataset has {n} rows; need at least {2 * config.batch_size}")
    all_folds = make_folds(n, config.cv_scheme, config.seed, config.k_folds)
    selected = range(len(all_folds)) if folds is None else folds
    jobs_args = [(dataset, all_folds[i][0], all_folds[i][1], config, variants, i, config.seed ^ i)
                 for i in selected]
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            per_fold = list(ex.map(_run_fold_job, jobs_args))
    else:
        per_fold = [_run_fold_job(a) for a in jobs_args]

    results = {}
    for name in variants:
        report = metrics.MetricReport(name)
        outcomes = [pf[name] for pf in per_fold]
        for o in outcomes:
            report.add(**o.values)
        results[name] = CVResult(name, report, outcomes)
    return results


def cross_validate(dataset, config, jobs=1):
    """Cross-validate ``config.loss_kind`` (honouring ``config.batch_sorting``)."""
    return cross_validate_methods(dataset, config, {config.loss_kind: config}, jobs)[config.loss_kind]


def pick_by_dominance(results, tau):
    """Name of the dominance-best result judged on mean validation PICP and MPIW."""
    names = list(results)
    recs = [SolutionRecord(i, results[n].report.mean("picp"), results[n].report.mean("mpiw"))
            for i, n in enumerate(names)]
    return names[select_solution(recs, tau).epoch]


@dataclass
class GridSearchResult:
    best_alpha: float
    results: dict  # alpha -> CVResult


def grid_search_alpha(dataset, config, alphas=DEFAULT_ALPHAS, jobs=1):
    alphas = list(alphas)
    if not alphas:
        raise ConfigurationError("grid search needs at least one alpha")
    variants = {f"alpha={a:g}": config.replace(loss_kind="dualaqd", alpha=a) for a in alphas}
    res = cross_validate_methods(dataset, config, variants, jobs)
    by_alpha = {a: res[f"alpha={a:g}"] for a in alphas}
    winner = pick_by_dominance({a: r for a, r in by_alpha.items()}, config.tau)
    return GridSearchResult(winner, by_alpha)


def qdplus_random_search(dataset, config, trials, xi_grid=(0.1, 1.0, 10.0), jobs=1, seed=None):
    """Seeded random search over QD+ coefficients; returns ``(best_config, results)``."""
    if trials < 1:
        raise ConfigurationError("qdplus random search needs at least one trial")
    rng = np.random.default_rng([config.seed if seed is None else seed, 4243])
    variants = {}
    for t in range(trials):
        l1, l2 = rng.uniform(0.0, 1.0, size=2)
        xi = float(rng.choice(xi_grid))
        variants[f"qdplus#{t}"] = config.replace(loss_kind="qdplus", lambda1=float(l1),
                                                 lambda2=float(l2), xi_qd=xi)
    res = cross_validate_methods(dataset, config, variants, jobs)
    best = pick_by_dominance(res, config.tau)
    return variants[best], res


def compare_methods(dataset, config, methods=METHODS, jobs=1):
    """Cross-validate each method on shared folds and test the MPIW winner.

    Returns ``(results, winner, tests)``: ``winner`` has the lowest mean MPIW
    and ``tests`` maps every other method to a paired t-test on per-fold MPIW.
    """
    variants = {}
    for m in methods:
        cfg = method_config(config, m)
        if m == "qdplus" and config.qdplus_search_trials > 0:
            cfg, _ = qdplus_random_search(dataset, cfg, config.qdplus_search_trials, jobs=jobs)
        variants[m] = cfg
    results = cross_validate_methods(dataset, config, variants, jobs)
    winner = min(results, key=lambda n: results[n].report.mean("mpiw"))
    tests = {}
    if len(results[winner].folds) >= 2:
        for name, r in results.items():
            if name != winner:
                tests[name] = metrics.paired_t_test(results[winner].report.values("mpiw"),
                                                    r.report.values("mpiw"))
    return results, winner, tests
