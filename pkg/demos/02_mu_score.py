"""The mu score: width against coverage, integrated over the weight omega.

Run with ``python demos/02_mu_score.py``. Instant.
"""
import numpy as np

from dualaqd.metrics import mu_integral, mu_omega, mu_quadrature, mu_scores

# three methods on the same data: (MPIW, PICP)
names = ["narrow", "balanced", "wide"]
mpiws = [1.2, 1.6, 3.0]
picps = [0.90, 0.95, 0.99]

curves = mu_scores(mpiws, picps)
for name, c in zip(names, curves):
    print(f"{name:9s} mu={c.mu_integral:.4f}  (widths scaled by {c.upper_bound:.1f})")

# widths are normalized by the widest method in the group
w = np.asarray(mpiws) / max(mpiws)
print(w)

# closed form against brute-force quadrature
for wi, p in zip(w, picps):
    print(mu_integral(wi, p), mu_quadrature(wi, p))

# the curve itself: low omega favours coverage, high omega favours width
omegas = np.linspace(0, 1, 6)
for name, wi, p in zip(names, w, picps):
    print(name, np.round(mu_omega(wi, p, omegas), 3))
