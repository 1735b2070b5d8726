"""Reporting metrics for prediction intervals."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .exceptions import ConfigurationError
from .losses import coverage_indicator

log = logging.getLogger(__name__)


def mpiw(y_u, y_l):
    """Mean interval width. Negative widths are kept but logged."""
    w = np.asarray(y_u, dtype=np.float64) - np.asarray(y_l, dtype=np.float64)
    if w.size == 0:
        raise ConfigurationError("mpiw of an empty set")
    if np.any(w < 0):
        log.warning("%d intervals have negative width (upper < lower)", int(np.sum(w < 0)))
    return float(w.mean())


def picp(y, y_l, y_u, y_hat=None):
    return float(coverage_indicator(y_l, y_hat, y, y_u).mean())


def mse(y_hat, y):
    r = np.asarray(y_hat, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.mean(r * r))


def rmse(y_hat, y):
    return math.sqrt(mse(y_hat, y))


def pi_delta(y_u, y_l, ideal_u, ideal_l):
    """Mean absolute deviation of estimated bounds from ideal bounds."""
    if ideal_u is None or ideal_l is None:
        raise ConfigurationError("pi_delta needs ideal bounds")
    y_u, y_l, ideal_u, ideal_l = (np.asarray(a, dtype=np.float64) for a in (y_u, y_l, ideal_u, ideal_l))
    return float(np.mean(np.abs(ideal_u - y_u) + np.abs(ideal_l - y_l)))


# -- width/coverage trade-off score ------------------------------------------

def mu_omega(mpiw_norm, picp_value, omega):
    """Weighted geometric mean of normalized width and coverage shortfall."""
    omega = np.asarray(omega, dtype=np.float64)
    b = 1.0 - np.asarray(picp_value, dtype=np.float64)
    if np.any(b == 0.0) and np.any(omega < 1.0):
        log.info("picp == 1: mu_omega is 0 for every omega < 1")
    return mpiw_norm ** omega * b ** (1.0 - omega)


def mu_integral(mpiw_norm, picp_value):
    """Integral of :func:`mu_omega` over omega in [0, 1], in closed form."""
    a, b = float(mpiw_norm), 1.0 - float(picp_value)
    if a <= 0.0 or b <= 0.0:
        return 0.0
    if math.isclose(a, b, rel_tol=1e-12):
        return a
    return (a - b) / math.log(a / b)


def mu_quadrature(mpiw_norm, picp_value, n=10_001):
    """Trapezoidal cross-check of :func:`mu_integral`."""
    w = np.linspace(0.0, 1.0, n)
    return float(np.trapezoid(mu_omega(mpiw_norm, picp_value, w), w))


@dataclass
class MuCurve:
    omegas: np.ndarray
    mu_values: np.ndarray
    mu_integral: float
    upper_bound: float


def mu_scores(mpiws, picps, n_omega=101):
    """Score a group of methods compared on the same data.

    Widths are min-max normalized with lower bound 0 and upper bound the
    largest width in the group. ``picps`` are fractions in [0, 1].
    """
    mpiws = np.asarray(mpiws, dtype=np.float64)
    upper = float(mpiws.max())
    omegas = np.linspace(0.0, 1.0, n_omega)
    curves = []
    for m, p in zip(mpiws, picps):
        a = m / upper
        curves.append(MuCurve(omegas, mu_omega(a, p, omegas), mu_integral(a, p), upper))
    return curves


# -- significance ------------------------------------------------------------

@dataclass
class TTestResult:
    statistic: float
    p_value: float
    significant: bool


def paired_t_test(a, b, level=0.05):
    """Two-sided paired t-test on per-fold metric vectors."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ConfigurationError("paired_t_test needs two equal-length vectors with n >= 2")
    d = a - b
    n = d.size
    sd = d.std(ddof=1)
    mean = d.mean()
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, False)
        return TTestResult(math.copysign(math.inf, mean), 0.0, True)
    t = mean / (sd / math.sqrt(n))
    p = float(2.0 * stats.t.sf(abs(t), df=n - 1))
    return TTestResult(float(t), p, p < level)


# -- reports -----------------------------------------------------------------

METRIC_NAMES = ("mse", "mpiw", "picp", "pi_delta")


@dataclass
class MetricReport:
    """Per-fold validation metrics of one method, in original target units."""

    method: str
    folds: dict = field(default_factory=lambda: {k: [] for k in METRIC_NAMES})

    def add(self, **values):
        for k in METRIC_NAMES:
            v = values.get(k)
            if v is not None:
                self.folds[k].append(float(v))

    def values(self, name):
        return np.asarray(self.folds[name], dtype=np.float64)

    def mean(self, name):
        v = self.values(name)
        return float(v.mean()) if v.size else float("nan")

    def std(self, name):
        v = self.values(name)
        return float(v.std()) if v.size else float("nan")

    def to_dict(self):
        out = {"method": self.method, "folds": {k: list(v) for k, v in self.folds.items() if v}}
        out["mean"] = {k: self.mean(k) for k in METRIC_NAMES if self.folds[k]}
        out["std"] = {k: self.std(k) for k in METRIC_NAMES if self.folds[k]}
        return out


def write_comparison_csv(reports, path):
    """One row per method: MSE, MPIW, PICP (%), PI_delta as mean and std."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "mse_mean", "mse_std", "mpiw_mean", "mpiw_std",
                    "picp_pct_mean", "picp_pct_std", "pi_delta_mean", "pi_delta_std"])
        for r in reports:
            row = [r.method]
            for k in METRIC_NAMES:
                scale = 100.0 if k == "picp" else 1.0
                row += [f"{scale * r.mean(k):.6g}", f"{scale * r.std(k):.6g}"]
            w.writerow(row)
    return path
