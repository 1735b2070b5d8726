"""Loss functions and their gradients with respect to network outputs.

Arrays are 1-D, one entry per sample in the batch. Every loss returns its
value together with the gradients a caller needs to backpropagate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, NumericOverflowError

log = logging.getLogger(__name__)

EXPONENT_CLIP = 50.0
DEFAULT_EPS = 1e-8


def _as_batch(*arrays):
    out = [np.asarray(a, dtype=np.float64).reshape(-1) for a in arrays]
    n = out[0].size
    if n == 0:
        raise ConfigurationError("empty batch")
    if any(a.size != n for a in out):
        raise ConfigurationError(f"batch arrays differ in length: {[a.size for a in out]}")
    return out


def _sigmoid(z):
    # split form avoids overflow in exp for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def mse_loss(y_hat, y):
    """Mean squared error and its gradient w.r.t. ``y_hat``."""
    y_hat, y = _as_batch(y_hat, y)
    r = y_hat - y
    return float(np.mean(r * r)), 2.0 * r / r.size


def coverage_indicator(y_l, y_hat, y, y_u):
    """1 where both the estimate and the target lie strictly inside the interval.

    Pass ``y_hat=None`` to test the target only.
    """
    y_l = np.asarray(y_l, dtype=np.float64)
    y_u = np.asarray(y_u, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    inside = (y_l < y) & (y < y_u)
    if y_hat is not None:
        y_hat = np.asarray(y_hat, dtype=np.float64)
        inside &= (y_l < y_hat) & (y_hat < y_u)
    return inside.astype(np.int64)


def picp(indicators):
    k = np.asarray(indicators)
    if k.size == 0:
        raise ConfigurationError("picp of an empty set")
    return float(k.sum() / k.size)


def mpiw_capt(y_u, y_l, indicators, epsilon=DEFAULT_EPS):
    """Mean width of the captured intervals only."""
    y_u, y_l, k = _as_batch(y_u, y_l, indicators)
    return float(np.sum((y_u - y_l) * k) / (epsilon + k.sum()))


def _mpiw_capt_grad(y_u, y_l, k, epsilon):
    denom = epsilon + k.sum()
    value = float(np.sum((y_u - y_l) * k) / denom)
    return value, k / denom, -k / denom


def mpiw_pen(y_u, y, y_l):
    """Target-anchored width penalty ``mean(|y_u - y| + |y - y_l|)``.

    Returns ``(value, d/dy_u, d/dy_l)``; the subgradient of ``|.|`` at 0 is 0.
    """
    y_u, y, y_l = _as_batch(y_u, y, y_l)
    n = y.size
    value = float(np.mean(np.abs(y_u - y) + np.abs(y - y_l)))
    return value, np.sign(y_u - y) / n, -np.sign(y - y_l) / n


@dataclass
class DualAqdTerms:
    mpiw_pen: float = 0.0
    xi: float = 0.0
    d_u: float = 0.0
    d_l: float = 0.0
    c: float = 0.0
    lam: float = 0.0
    total: float = 0.0


def _clipped_exp(z, what):
    if not np.isfinite(z):
        raise NumericOverflowError(f"non-finite exponent in {what}: {z}")
    if z > EXPONENT_CLIP:
        log.warning("coverage penalty exponent %s=%.3g clipped at %g", what, z, EXPONENT_CLIP)
        z = EXPONENT_CLIP
    return float(np.exp(z))


def coverage_penalty(y_hat, y, y_u, y_l):
    """Exponential penalty pushing mean bound distances above the max batch error.

    ``y_hat`` comes from the frozen point network and carries no gradient.
    Returns ``(terms, d/dy_u, d/dy_l)`` where ``terms`` fills xi, d_u, d_l and c.
    Exponents above ``EXPONENT_CLIP`` are clipped; the gradient then uses the
    clipped magnitude so the bounds still move in the right direction.
    """
    y_hat, y, y_u, y_l = _as_batch(y_hat, y, y_u, y_l)
    n = y.size
    xi = float(np.max(np.abs(y_hat - y)))
    d_u = float(np.mean(y_u - y))
    d_l = float(np.mean(y - y_l))
    try:
        e_u = _clipped_exp(xi - d_u, "xi - d_u")
        e_l = _clipped_exp(xi - d_l, "xi - d_l")
    except NumericOverflowError as exc:
        raise NumericOverflowError(
            f"{exc} (batch size {n}, xi={xi}, d_u={d_u}, d_l={d_l})") from None
    terms = DualAqdTerms(xi=xi, d_u=d_u, d_l=d_l, c=e_u + e_l)
    return terms, np.full(n, -e_u / n), np.full(n, e_l / n)


def dualaqd_loss(y, y_hat, y_u, y_l, lam):
    """Width penalty plus ``lam`` times the coverage penalty.

    Returns ``(terms, d/dy_u, d/dy_l)``.
    """
    if lam < 0:
        raise ConfigurationError(f"lambda must be non-negative, got {lam}")
    pen, gu_pen, gl_pen = mpiw_pen(y_u, y, y_l)
    terms, gu_c, gl_c = coverage_penalty(y_hat, y, y_u, y_l)
    terms.mpiw_pen = pen
    terms.lam = float(lam)
    terms.total = pen + lam * terms.c
    return terms, gu_pen + lam * gu_c, gl_pen + lam * gl_c


@dataclass
class QdHyperparams:
    """Coefficients of the QD-Ens and QD+ baselines.

    ``xi_qd`` weighs the QD+ estimate-inside-interval hinge and is unrelated
    to the max batch error used by DualAQD. ``hinge`` picks the orientation
    of that hinge: ``"violation"`` penalises estimates outside the interval,
    ``"printed"`` uses the reversed form ``max(0, y_u - y_hat) + max(0, y_hat - y_l)``.
    """

    delta: float = 0.02
    lambda1: float = 0.5
    lambda2: float = 0.5
    xi_qd: float = 1.0
    soften_s: float = 160.0
    tau: float = 0.05
    hinge: str = "violation"

    def __post_init__(self):
        problems = []
        if not 0.0 < self.tau < 1.0:
            problems.append(f"tau must lie in (0, 1), got {self.tau}")
        if self.soften_s <= 0:
            problems.append(f"soften_s must be positive, got {self.soften_s}")
        for name in ("lambda1", "lambda2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                problems.append(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if self.delta <= 0:
            problems.append(f"delta must be positive, got {self.delta}")
        if self.xi_qd < 0:
            problems.append(f"xi_qd must be non-negative, got {self.xi_qd}")
        if self.hinge not in ("violation", "printed"):
            problems.append(f"hinge must be 'violation' or 'printed', got {self.hinge!r}")
        if problems:
            raise ConfigurationError("; ".join(problems))


def soft_picp(y, y_u, y_l, s):
    """Sigmoid-softened coverage; returns ``(value, d/dy_u, d/dy_l)``."""
    n = y.size
    su = _sigmoid(s * (y_u - y))
    sl = _sigmoid(s * (y - y_l))
    value = float(np.mean(su * sl))
    gu = s * su * (1.0 - su) * sl / n
    gl = -s * sl * (1.0 - sl) * su / n
    return value, gu, gl


def _coverage_shortfall(y, y_u, y_l, hp):
    """``max(0, (1 - tau) - PICP_soft)**2`` and its gradients."""
    p, gu, gl = soft_picp(y, y_u, y_l, hp.soften_s)
    gap = max(0.0, (1.0 - hp.tau) - p)
    return gap * gap, -2.0 * gap * gu, -2.0 * gap * gl


def qd_loss(y, y_u, y_l, hp):
    """QD-Ens quality-driven loss. Returns ``(value, d/dy_u, d/dy_l)``."""
    y, y_u, y_l = _as_batch(y, y_u, y_l)
    n = y.size
    k = coverage_indicator(y_l, None, y, y_u)
    capt, gu_c, gl_c = _mpiw_capt_grad(y_u, y_l, k, DEFAULT_EPS)
    short, gu_s, gl_s = _coverage_shortfall(y, y_u, y_l, hp)
    scale = hp.delta * n / (hp.tau * (1.0 - hp.tau))
    return capt + scale * short, gu_c + scale * gu_s, gl_c + scale * gl_s


def qdplus_loss(y, y_hat, y_u, y_l, hp):
    """QD+ loss for a three-output network.

    Returns ``(value, d/dy_u, d/dy_l, d/dy_hat)``.
    """
    y, y_hat, y_u, y_l = _as_batch(y, y_hat, y_u, y_l)
    n = y.size
    l1, l2 = hp.lambda1, hp.lambda2
    k = coverage_indicator(y_l, None, y, y_u)
    capt, gu_c, gl_c = _mpiw_capt_grad(y_u, y_l, k, DEFAULT_EPS)
    short, gu_s, gl_s = _coverage_shortfall(y, y_u, y_l, hp)
    mse, g_hat = mse_loss(y_hat, y)

    if hp.hinge == "violation":
        a, b = y_hat - y_u, y_l - y_hat
        # d a/d y_u = -1, d a/d y_hat = +1 ; d b/d y_l = +1, d b/d y_hat = -1
        sa, sb = (a > 0).astype(np.float64), (b > 0).astype(np.float64)
        hinge_u, hinge_l, hinge_hat = -sa, sb, sa - sb
    else:
        a, b = y_u - y_hat, y_hat - y_l
        sa, sb = (a > 0).astype(np.float64), (b > 0).astype(np.float64)
        hinge_u, hinge_l, hinge_hat = sa, -sb, sb - sa
    hinge = float(np.sum(np.maximum(0.0, a) + np.maximum(0.0, b)))
    w = hp.xi_qd / n

    value = ((1 - l1) * (1 - l2) * capt + l1 * (1 - l2) * short + l2 * mse + w * hinge)
    gu = (1 - l1) * (1 - l2) * gu_c + l1 * (1 - l2) * gu_s + w * hinge_u
    gl = (1 - l1) * (1 - l2) * gl_c + l1 * (1 - l2) * gl_s + w * hinge_l
    gh = l2 * g_hat + w * hinge_hat
    return value, gu, gl, gh
