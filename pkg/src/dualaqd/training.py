"""Training loops for the point network and the interval network."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .exceptions import ConfigurationError, TrainingError
from .inference import ESTIMATE, LOWER, UPPER
from .losses import QdHyperparams, coverage_indicator, dualaqd_loss, mse_loss, qd_loss, qdplus_loss
from .nn import Adam, Mlp, backward, forward, transfer_weights

log = logging.getLogger(__name__)

LOSS_KINDS = ("dualaqd", "qd", "qdplus", "mcdropout_pi")
PICP_TOL = 1e-9


@dataclass
class TrainConfig:
    tau: float = 0.05
    alpha: float = 0.01
    batch_size: int = 16
    max_epochs: int = 500
    f_epochs: int | None = None  # epochs for the point network; defaults to max_epochs
    loss_kind: str = "dualaqd"
    batch_sorting: bool = True
    mc_passes: int = 100
    seed: int = 0
    hidden: tuple = (100, 100)
    activation: str = "relu"
    dropout_rate: float = 0.1
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    # QD-Ens / QD+ baselines
    delta: float = 0.02
    lambda1: float = 0.5
    lambda2: float = 0.5
    xi_qd: float = 1.0
    soften_s: float = 160.0
    qdplus_hinge: str = "violation"
    ensemble_size: int = 5
    qdplus_search_trials: int = 0
    # cross-validation
    cv_scheme: str = "5x2"
    k_folds: int = 10
    target_scaling: str = "minmax"

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        problems = self.problems()
        if problems:
            raise ConfigurationError("invalid TrainConfig: " + "; ".join(problems))

    def problems(self):
        p = []
        if not 0.0 < self.tau < 1.0:
            p.append(f"tau must lie in (0, 1), got {self.tau}")
        if not self.alpha > 0:
            p.append(f"alpha must be > 0, got {self.alpha}")
        if self.batch_size < 1:
            p.append(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 0:
            p.append(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.f_epochs is not None and self.f_epochs < 0:
            p.append(f"f_epochs must be >= 0, got {self.f_epochs}")
        if self.mc_passes < 1:
            p.append(f"mc_passes must be >= 1, got {self.mc_passes}")
        if self.loss_kind not in LOSS_KINDS:
            p.append(f"loss_kind must be one of {', '.join(LOSS_KINDS)}; got {self.loss_kind!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            p.append(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if not self.hidden or min(self.hidden) < 1:
            p.append(f"hidden layer widths must be positive, got {self.hidden}")
        if self.lr <= 0:
            p.append(f"lr must be > 0, got {self.lr}")
        if self.ensemble_size < 1:
            p.append(f"ensemble_size must be >= 1, got {self.ensemble_size}")
        if self.cv_scheme not in ("5x2", "kfold"):
            p.append(f"cv_scheme must be '5x2' or 'kfold', got {self.cv_scheme!r}")
        if self.target_scaling not in ("minmax", "zscore"):
            p.append(f"target_scaling must be 'minmax' or 'zscore', got {self.target_scaling!r}")
        if self.k_folds < 2:
            p.append(f"k_folds must be >= 2, got {self.k_folds}")
        try:
            self.qd_hyperparams()
        except ConfigurationError as exc:
            p.append(str(exc))
        return p

    @property
    def point_epochs(self):
        return self.max_epochs if self.f_epochs is None else self.f_epochs

    def qd_hyperparams(self):
        return QdHyperparams(self.delta, self.lambda1, self.lambda2, self.xi_qd,
                             self.soften_s, self.tau, self.qdplus_hinge)

    def replace(self, **changes):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return TrainConfig(**d)

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class SolutionRecord:
    epoch: int
    picp_val: float
    mpiw_val: float
    checkpoint: Mlp | None = None


@dataclass
class LambdaTrace:
    """``lam[0]`` is the initial value; entry ``t`` is the value after epoch ``t``."""

    alpha: float
    tau: float
    picp_train: list = field(default_factory=lambda: [float("nan")])
    cost: list = field(default_factory=lambda: [0.0])
    lam: list = field(default_factory=lambda: [1.0])

    def append(self, picp_train, cost, lam):
        self.picp_train.append(picp_train)
        self.cost.append(cost)
        self.lam.append(lam)

    def rows(self):
        return [{"epoch": t, "picp_train": p, "cost": c, "lambda": l}
                for t, (p, c, l) in enumerate(zip(self.picp_train, self.cost, self.lam))]


@dataclass
class PiTrainResult:
    model: Mlp
    best: SolutionRecord
    records: list
    lambda_trace: LambdaTrace | None = None
    last_model: Mlp | None = None


def network_dims(n_features, hidden, n_outputs):
    return [int(n_features), *hidden, int(n_outputs)]


def new_network(n_features, n_outputs, config, rng):
    return Mlp.init(network_dims(n_features, config.hidden, n_outputs), rng,
                    config.activation, config.dropout_rate)


def _optimizer(model, config):
    return Adam(model.params(), config.lr, config.beta1, config.beta2, config.adam_eps)


def shuffle_batches(n, batch_size, rng):
    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def batch_sorting(widths, batch_size, n=None):
    """Indices sorted by ascending width (stable), chunked into batches.

    The final batch may be smaller than ``batch_size``.
    """
    widths = np.asarray(widths, dtype=np.float64).reshape(-1)
    if n is not None and widths.size != n:
        raise ConfigurationError(f"{widths.size} widths for {n} training samples")
    order = np.argsort(widths, kind="stable")
    return [order[i:i + batch_size] for i in range(0, order.size, batch_size)]


def update_lambda(lam, alpha, tau, picp_train):
    """One step of the self-adaptive coefficient, clamped at zero."""
    return max(0.0, lam + alpha * ((1.0 - tau) - picp_train))


# -- solution selection -------------------------------------------------------

def dominates(a, b, tau):
    """True if solution ``a`` is strictly preferred to ``b``.

    Any solution meeting the coverage target beats any that misses it; among
    solutions meeting it, the narrower wins; among solutions missing it, the
    higher coverage wins, then the narrower.
    """
    target = 1.0 - tau
    a_ok = a.picp_val >= target - PICP_TOL
    b_ok = b.picp_val >= target - PICP_TOL
    if a_ok != b_ok:
        return a_ok
    if a_ok:
        return a.mpiw_val < b.mpiw_val
    if abs(a.picp_val - b.picp_val) <= PICP_TOL:
        return a.mpiw_val < b.mpiw_val
    return a.picp_val > b.picp_val


def select_solution(records, tau):
    """Earliest record that no other record dominates."""
    if not records:
        raise ConfigurationError("select_solution needs at least one record")
    best = records[0]
    for r in records[1:]:
        if dominates(r, best, tau):
            best = r
    return best


# -- point network ------------------------------------------------------------

def _check_finite(value, what):
    if not np.isfinite(value):
        raise TrainingError(f"non-finite loss {value} at {what}")


def train_point_network(X, y, config, rng, X_val=None, y_val=None, keep_best=True):
    """Fit the one-output network on MSE; returns ``(model, val_mse_history)``.

    With validation data and ``keep_best`` the lowest-validation-MSE epoch is
    returned, otherwise the final weights.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    model = new_network(X.shape[1], 1, config, rng)
    opt = _optimizer(model, config)
    params = model.params()
    history = []
    best_mse, best = np.inf, model.copy()
    for epoch in range(1, config.point_epochs + 1):
        for b, idx in enumerate(shuffle_batches(y.size, config.batch_size, rng)):
            out, trace = forward(model, X[idx], True, rng)
            loss, grad = mse_loss(out[:, 0], y[idx])
            _check_finite(loss, f"epoch {epoch}, batch {b}")
            opt.step(params, backward(model, trace, grad), f"epoch {epoch}, batch {b}")
        if X_val is not None:
            val = mse_loss(forward(model, X_val)[0][:, 0], y_val)[0]
            history.append(val)
            if val < best_mse:
                best_mse, best = val, model.copy()
    if not keep_best or not history:
        return model, history
    return best, history


# -- interval network ---------------------------------------------------------

def _pi_loss(kind, y, y_hat, out, lam, hp):
    """Loss value and gradient w.r.t. the network outputs for one batch."""
    grad = np.zeros_like(out)
    lower, upper = out[:, LOWER], out[:, UPPER]
    if kind == "dualaqd":
        terms, gu, gl = dualaqd_loss(y, y_hat, upper, lower, lam)
        value = terms.total
    elif kind == "qd":
        value, gu, gl = qd_loss(y, upper, lower, hp)
    elif kind == "qdplus":
        value, gu, gl, gh = qdplus_loss(y, out[:, ESTIMATE], upper, lower, hp)
        grad[:, ESTIMATE] = gh
    else:
        raise ConfigurationError(f"no interval network for loss_kind {kind!r}")
    grad[:, LOWER] = gl
    grad[:, UPPER] = gu
    return value, grad


def _interval_stats(model, X, y, y_hat):
    out = forward(model, X)[0]
    lower, upper = out[:, LOWER], out[:, UPPER]
    est = out[:, ESTIMATE] if model.output_dim > ESTIMATE else y_hat
    k = coverage_indicator(lower, est, y, upper)
    return float(k.mean()), upper - lower


def train_pi_network(X, y, f, config, rng, X_val=None, y_val=None, target_scale=1.0,
                     batch_sorting_enabled=None):
    """Train an interval network and pick the dominance-best epoch on validation data.

    ``f`` is the trained point network; its deterministic output supplies the
    estimates used by the DualAQD loss. For DualAQD the hidden layers start
    from ``f``'s weights; the QD baselines start from scratch.
    """
    kind = config.loss_kind
    sort = config.batch_sorting if batch_sorting_enabled is None else batch_sorting_enabled
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    hp = config.qd_hyperparams()

    n_out = 3 if kind == "qdplus" else 2
    g = new_network(X.shape[1], n_out, config, rng)
    if kind == "dualaqd":
        transfer_weights(f, g)
    opt = _optimizer(g, config)
    params = g.params()

    y_hat = forward(f, X)[0][:, 0] if f is not None else None
    if X_val is not None:
        y_hat_val = forward(f, X_val)[0][:, 0] if f is not None else None

    trace = LambdaTrace(config.alpha, config.tau) if kind == "dualaqd" else None
    lam = 1.0
    widths = None
    records = []
    best = None
    for epoch in range(1, config.max_epochs + 1):
        if epoch > 1 and sort:
            batches = batch_sorting(widths, config.batch_size, n)
        else:
            batches = shuffle_batches(n, config.batch_size, rng)
        for b, idx in enumerate(batches):
            out, ftrace = forward(g, X[idx], True, rng)
            where = f"epoch {epoch}, batch {b}"
            try:
                value, grad = _pi_loss(kind, y[idx], None if y_hat is None else y_hat[idx],
                                       out, lam, hp)
                _check_finite(value, where)
                opt.step(params, backward(g, ftrace, grad), where)
            except TrainingError as exc:
                lam_info = f"; lambda trace {trace.lam}" if trace is not None else ""
                raise TrainingError(f"{exc}{lam_info}") from exc

        picp_train, widths = _interval_stats(g, X, y, y_hat)
        if trace is not None:
            cost = (1.0 - config.tau) - picp_train
            lam = update_lambda(lam, config.alpha, config.tau, picp_train)
            trace.append(picp_train, cost, lam)

        if X_val is not None:
            picp_val, w_val = _interval_stats(g, X_val, y_val, y_hat_val)
            rec = SolutionRecord(epoch, picp_val, float(np.mean(w_val)) * target_scale)
            records.append(rec)
            if best is None or dominates(rec, best, config.tau):
                rec.checkpoint = g.copy()
                if best is not None:
                    best.checkpoint = None
                best = rec

    if best is None:
        best = SolutionRecord(config.max_epochs, float("nan"), float("nan"), g.copy())
    return PiTrainResult(best.checkpoint, best, records, trace, g)
