"""Monte Carlo dropout aggregation of point estimates and interval bounds."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exceptions import ConfigurationError
from .nn import forward

log = logging.getLogger(__name__)

# output columns of interval networks
LOWER, UPPER, ESTIMATE = 0, 1, 2


@dataclass
class PiTriple:
    y_bar: np.ndarray
    y_u_bar: np.ndarray
    y_l_bar: np.ndarray
    model_var: np.ndarray | None = None

    @property
    def width(self):
        return self.y_u_bar - self.y_l_bar


def z_critical(tau):
    """Two-sided standard normal critical value; exactly 1.96 for tau = 0.05."""
    if not 0.0 < tau < 1.0:
        raise ConfigurationError(f"tau must lie in (0, 1), got {tau}")
    if tau == 0.05:
        return 1.96
    return float(stats.norm.ppf(1.0 - tau / 2.0))


def _pass_rng(seed, m, stream):
    return np.random.default_rng([seed, m, stream])


def mc_samples(model, X, M, seed, stream=0):
    """``(M, N, output_dim)`` array of dropout-active forward passes."""
    if M < 1:
        raise ConfigurationError(f"number of forward passes must be >= 1, got {M}")
    X = np.asarray(X, dtype=np.float64)
    if model.dropout_rate == 0.0:
        out = forward(model, X)[0]
        return np.broadcast_to(out, (M,) + out.shape)
    return np.stack([forward(model, X, True, _pass_rng(seed, m, stream))[0] for m in range(M)])


def mc_aggregate(f, g, X, M=100, seed=0):
    """Average ``M`` dropout-active passes of the point network and interval network."""
    ys = mc_samples(f, X, M, seed, stream=0)[..., 0]
    bounds = mc_samples(g, X, M, seed, stream=1)
    triple = PiTriple(ys.mean(axis=0), bounds[..., UPPER].mean(axis=0),
                      bounds[..., LOWER].mean(axis=0))
    _check_order(triple)
    return triple


def mc_aggregate_ensemble(models, X, M=1, seed=0):
    """Mean bounds (and estimate, if present) over an ensemble of interval networks.

    With ``M == 1`` each member runs deterministically.
    """
    outs = []
    for i, model in enumerate(models):
        if M == 1:
            outs.append(forward(model, X)[0])
        else:
            outs.append(mc_samples(model, X, M, seed, stream=10 + i).mean(axis=0))
    out = np.mean(outs, axis=0)
    lower, upper = out[:, LOWER], out[:, UPPER]
    est = out[:, ESTIMATE] if out.shape[1] > ESTIMATE else 0.5 * (lower + upper)
    triple = PiTriple(est, upper, lower)
    _check_order(triple)
    return triple


def _check_order(triple):
    bad = int(np.sum(triple.y_l_bar > triple.y_u_bar))
    if bad:
        log.warning("%d aggregated intervals have lower > upper", bad)


def noise_variance(f, X_val, y_val, M=100, seed=0):
    """Data-noise variance estimate: MSE of the MC mean estimate on held-out data."""
    y_bar = mc_samples(f, X_val, M, seed, stream=2)[..., 0].mean(axis=0)
    return float(np.mean((y_bar - np.asarray(y_val)) ** 2))


def mcdropout_pi(f, X, M, sigma2_noise, tau=0.05, seed=0):
    """Symmetric interval from MC-dropout model variance plus noise variance."""
    if sigma2_noise < 0:
        raise ConfigurationError(f"sigma2_noise must be >= 0, got {sigma2_noise}")
    ys = mc_samples(f, X, M, seed, stream=0)[..., 0]
    y_bar = ys.mean(axis=0)
    var_model = ys.var(axis=0)
    half = z_critical(tau) * np.sqrt(var_model + sigma2_noise)
    return PiTriple(y_bar, y_bar + half, y_bar - half, var_model)


def denormalize_triple(triple, target_stats):
    """Map a triple from scaled target units back to original units."""
    d = target_stats.denormalize
    var = None if triple.model_var is None else triple.model_var * target_stats.scale ** 2
    return PiTriple(d(triple.y_bar), d(triple.y_u_bar), d(triple.y_l_bar), var)


def write_predictions(path, triple, y_true=None, sample_ids=None):
    """CSV with columns sample_id, y_true, y_bar, y_l, y_u."""
    n = triple.y_bar.size
    ids = np.arange(n) if sample_ids is None else np.asarray(sample_ids)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "y_true", "y_bar", "y_l", "y_u"])
        for i in range(n):
            yt = "" if y_true is None else repr(float(y_true[i]))
            w.writerow([int(ids[i]), yt, repr(float(triple.y_bar[i])),
                        repr(float(triple.y_l_bar[i])), repr(float(triple.y_u_bar[i]))])
    return path
