"""Intervals on the heteroscedastic sinusoid, one train/validation split.

Run with ``python demos/01_synthetic_intervals.py``. Takes about half a minute.
"""
import numpy as np

from dualaqd.data import SyntheticSpec, generate_synthetic
from dualaqd.inference import mc_aggregate
from dualaqd.metrics import mpiw, pi_delta, picp
from dualaqd.training import TrainConfig, train_pi_network, train_point_network

ds = generate_synthetic(SyntheticSpec(n_points=1000, seed=0))
print(ds.X.shape, ds.y.min(), ds.y.max())

# hold out a fifth of the points for epoch selection
rng = np.random.default_rng(0)
perm = rng.permutation(len(ds))
tr, va = perm[:800], perm[800:]

# standardize the feature and target with training statistics only
x_mu, x_sd = ds.X[tr].mean(0), ds.X[tr].std(0)
y_mu, y_sd = ds.y[tr].mean(), ds.y[tr].std()
X = (ds.X - x_mu) / x_sd
y = (ds.y - y_mu) / y_sd

cfg = TrainConfig(alpha=0.1, max_epochs=200, hidden=(50, 50), seed=0)

f, history = train_point_network(X[tr], y[tr], cfg, np.random.default_rng(1), X[va], y[va])
print("point network val MSE (scaled units):", min(history))

res = train_pi_network(X[tr], y[tr], f, cfg, np.random.default_rng(2), X[va], y[va])
print("chosen epoch", res.best.epoch, "of", len(res.records))

# the coverage weight moves against the coverage gap each epoch
lam = np.asarray(res.lambda_trace.lam)
print("lambda first/last/max:", lam[0], lam[-1], lam.max())

t = mc_aggregate(f, res.model, X[va], M=100, seed=0)
y_hat = t.y_bar * y_sd + y_mu
y_u = t.y_u_bar * y_sd + y_mu
y_l = t.y_l_bar * y_sd + y_mu

print("PICP", picp(ds.y[va], y_l, y_u, y_hat))
print("MPIW", mpiw(y_u, y_l))
print("PI_delta", pi_delta(y_u, y_l, ds.ideal_upper[va], ds.ideal_lower[va]))

# learned widths should follow the ideal widths along x
order = np.argsort(ds.X[va, 0])
for chunk in np.array_split(order, 5):
    x_mid = ds.X[va][chunk, 0].mean()
    print(f"x~{x_mid:+.1f}  width {np.mean(y_u[chunk] - y_l[chunk]):6.2f}  "
          f"ideal {np.mean(ds.ideal_upper[va][chunk] - ds.ideal_lower[va][chunk]):6.2f}")
