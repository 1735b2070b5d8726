"""Cross-validated comparison of DualAQD, its unsorted ablation and MC-Dropout-PI.

A reduced budget (100 epochs, plain 3-fold CV) keeps this to about a
minute. The acceptance suite runs the full 5x2, 500-epoch version.
"""
from dualaqd.data import SyntheticSpec, generate_synthetic
from dualaqd.experiments import compare_methods
from dualaqd.training import TrainConfig

ds = generate_synthetic(SyntheticSpec(n_points=1000, seed=0))
cfg = TrainConfig(alpha=0.1, max_epochs=100, hidden=(100, 100), cv_scheme="kfold", k_folds=3,
                  target_scaling="zscore", seed=0)

results, winner, tests = compare_methods(ds, cfg, ["dualaqd", "dualaqd_nobs", "mcdropout_pi"])

print(f"{'method':14s} {'MSE':>7s} {'MPIW':>7s} {'PICP':>7s} {'PI_delta':>9s}")
for name, r in results.items():
    rep = r.report
    print(f"{name:14s} {rep.mean('mse'):7.3f} {rep.mean('mpiw'):7.3f} "
          f"{100 * rep.mean('picp'):6.2f}% {rep.mean('pi_delta'):9.3f}")

print("narrowest:", winner)
for name, t in tests.items():
    print(f"  vs {name}: t={t.statistic:.2f} p={t.p_value:.3g}")
