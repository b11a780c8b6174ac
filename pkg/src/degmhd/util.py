"""Small shared helpers: smooth cutoffs, bumps and rate fitting."""

import numpy as np


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def smooth_step_deriv(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    a = np.exp(-1.0 / xs)
    b = np.exp(-1.0 / (1.0 - xs))
    da = a / xs**2
    db = -b / (1.0 - xs) ** 2
    d = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return np.where(inside, d, 0.0)


def smooth_step_derivs(x):
    """S, S' and S'' of smooth_step, in closed form."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    ys = 1.0 - xs
    a, b = np.exp(-1.0 / xs), np.exp(-1.0 / ys)
    a1, b1 = a / xs**2, -b / ys**2
    a2, b2 = a * (1 / xs**4 - 2 / xs**3), b * (1 / ys**4 - 2 / ys**3)
    D = a + b
    N = a1 * b - a * b1
    N1 = a2 * b - a * b2
    S1 = N / D**2
    S2 = (N1 * D - 2 * N * (a1 + b1)) / D**3
    S = np.where(x >= 1, 1.0, np.where(inside, a / D, 0.0))
    return S, np.where(inside, S1, 0.0), np.where(inside, S2, 0.0)


def cutoff(z, width=1.0):
    """chi(z): 1 on |z| <= width, 0 on |z| >= 2 width, smooth in between."""
    s = np.abs(np.asarray(z, dtype=float)) / width
    return 1.0 - smooth_step(s - 1.0)


def cutoff_deriv(z, width=1.0):
    z = np.asarray(z, dtype=float)
    s = np.abs(z) / width
    return -np.sign(z) * smooth_step_deriv(s - 1.0) / width


def bump(x):
    """Unnormalized bump exp(-1/(1-x^2)) on (-1, 1)."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1
    xs = np.where(inside, x, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - xs**2)), 0.0)


def fit_slope(x, y):
    """Least-squares slope and intercept of y against x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    (k, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(k), float(c)


def fit_rate(t, values):
    """Exponential rate: slope of log(values) against t."""
    return fit_slope(t, np.log(np.asarray(values, dtype=float)))


def fit_loglog(t, values):
    return fit_slope(np.log(t), np.log(values))
