"""Independent reference computations used by the tests."""
import math

import numpy as np


def central_diff(fun, x, h=1e-6):
    """Central finite-difference gradient of scalar ``fun`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = fun(x)
        flat[i] = old - h
        fm = fun(x)
        flat[i] = old
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def max_rel_err(a, b, floor=1e-8):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def naive_forward(weights, biases, x, activation="relu"):
    """Matrix chain written with explicit Python loops and ``math.fsum``."""
    act = {"relu": lambda v: v if v > 0 else 0.0, "tanh": math.tanh}[activation]
    a = [float(v) for v in x]
    last = len(weights) - 1
    for k, (w, b) in enumerate(zip(weights, biases)):
        out = []
        for j in range(w.shape[1]):
            z = math.fsum([a[i] * w[i, j] for i in range(w.shape[0])] + [b[j]])
            out.append(z if k == last else act(z))
        a = out
    return np.array(a)


def grad_rel_err(a, b, floor=1e-8):
    """Largest deviation relative to the largest gradient entry.

    Central differences carry roughly eps/h absolute roundoff, so an
    elementwise ratio is meaningless on entries near zero.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    scale = max(float(np.max(np.abs(b))), float(np.max(np.abs(a))), floor)
    return float(np.max(np.abs(a - b))) / scale
