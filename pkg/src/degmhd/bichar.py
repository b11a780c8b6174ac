"""Bicharacteristics of the degenerate dispersive symbol p(x, xi) = B0(x).xi |xi|.

Two built-in fields:

    shear   B0 = y chi(z) e_x
    axisym  B0 = f(r) chi(z) e_theta,  so B0.xi = (f/r) chi (x xi_y - y xi_x)

chi is 1 on |z| <= 1 and vanishes for |z| >= 2.  Along a ray started at
y = 1 with xi = (lam, -lam, 0) in the shear field, |xi| grows like e^{lam t}
while y decays like e^{-lam t}.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .util import cutoff, cutoff_deriv


class RayDomainError(ValueError):
    pass


@dataclass
class Field:
    kind: str
    prof: object = None     # RadialProfile for the axisymmetric family
    chi_width: float = 1.0
    use_chi: bool = True

    def chi(self, z):
        return cutoff(z, self.chi_width) if self.use_chi else np.ones_like(np.asarray(z, float))

    def dchi(self, z):
        return cutoff_deriv(z, self.chi_width) if self.use_chi else np.zeros_like(np.asarray(z, float))


def shear_field(use_chi=True):
    return Field("shear", use_chi=use_chi)


def axisym_field(prof, use_chi=True):
    return Field("axisym", prof=prof, use_chi=use_chi)


def constant_field(b):
    f = Field("constant", use_chi=False)
    f.b = np.asarray(b, float)
    return f


def symbol(field, X, Xi):
    """p, grad_X p, grad_Xi p for one state."""
    X = np.asarray(X, float)
    Xi = np.asarray(Xi, float)
    nxi = np.linalg.norm(Xi)
    if nxi == 0:
        raise RayDomainError("symbol undefined at Xi = 0")
    x, y, z = X
    unit = Xi / nxi
    if field.kind == "constant":
        a = field.b @ Xi
        return a * nxi, np.zeros(3), field.b * nxi + a * unit
    c, dc = float(field.chi(z)), float(field.dchi(z))
    if field.kind == "shear":
        a = y * c * Xi[0]                     # B0.Xi
        p = a * nxi
        gX = np.array([0.0, c * Xi[0] * nxi, y * dc * Xi[0] * nxi])
        gXi = y * c * np.array([nxi, 0.0, 0.0]) + a * unit
        return p, gX, gXi
    if field.kind == "axisym":
        r = np.hypot(x, y)
        f, df = float(field.prof.f(r)), float(field.prof.df(r))
        g = f / r
        dg = (df * r - f) / r**2
        xth = x * Xi[1] - y * Xi[0]
        p = g * c * xth * nxi
        gX = np.array([dg * x / r * c * xth * nxi + g * c * Xi[1] * nxi,
                       dg * y / r * c * xth * nxi - g * c * Xi[0] * nxi,
                       g * dc * xth * nxi])
        gXi = g * c * (np.array([-y, x, 0.0]) * nxi + xth * unit)
        return p, gX, gXi
    raise ValueError(f"unknown field kind {field.kind!r}")


def hamiltonian(field, X, Xi):
    return symbol(field, X, Xi)[0]


@dataclass
class RayState:
    X: np.ndarray
    Xi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.X = np.asarray(self.X, float)
        self.Xi = np.asarray(self.Xi, float)
        if np.linalg.norm(self.Xi) == 0:
            raise RayDomainError("initial frequency must be nonzero")


@dataclass
class Trajectory:
    field: Field
    t: np.ndarray
    X: np.ndarray       # (n, 3)
    Xi: np.ndarray      # (n, 3)
    H: np.ndarray
    status: str
    sol: object = None

    @property
    def xi_norm(self):
        return np.linalg.norm(self.Xi, axis=1)

    def h_drift(self):
        H0 = self.H[0]
        return float(np.max(np.abs(self.H - H0)) / abs(H0)) if H0 else float(np.max(np.abs(self.H)))

    def first_integral(self):
        """Xi_x for the shear field, Xi_theta = x Xi_y - y Xi_x for the axisymmetric one."""
        if self.field.kind == "axisym":
            return self.X[:, 0] * self.Xi[:, 1] - self.X[:, 1] * self.Xi[:, 0]
        return self.Xi[:, 0]

    def integral_drift(self):
        I = self.first_integral()
        return float(np.max(np.abs(I - I[0])) / max(abs(I[0]), 1e-300))

    def xi_slope(self, window=None):
        """Fitted slope of log |Xi| against t over window (default: whole run)."""
        t, v = self.t, np.log(self.xi_norm)
        m = np.ones_like(t, bool) if window is None else (t >= window[0]) & (t <= window[1])
        return float(np.polyfit(t[m], v[m], 1)[0])


def trace_ray(field, state, T, tol=1e-9, n_out=200, xi_max=1e150):
    """Adaptive RK45 on X' = grad_Xi p, Xi' = -grad_X p with dense output."""
    if tol <= 0:
        raise ValueError("tol must be positive")

    def rhs(t, y):
        _, gX, gXi = symbol(field, y[:3], y[3:])
        return np.concatenate([gXi, -gX])

    def blowup(t, y):
        return xi_max - np.linalg.norm(y[3:])
    blowup.terminal = True

    y0 = np.concatenate([state.X, state.Xi])
    scale = np.abs(y0) + 1e-3
    sol = solve_ivp(rhs, (state.t, state.t + T), y0, method="RK45", rtol=tol,
                    atol=tol * 1e-3 * scale, dense_output=True, events=blowup)
    if sol.status == -1:
        status = f"halted: {sol.message}"
    elif sol.status == 1:
        status = "halted: frequency overflow"
    else:
        status = "ok"
    t_end = sol.t[-1]
    ts = np.linspace(state.t, t_end, n_out)
    Y = sol.sol(ts).T
    # include the exact integrator nodes' end point value
    H = np.array([hamiltonian(field, y[:3], y[3:]) for y in Y])
    return Trajectory(field, ts, Y[:, :3], Y[:, 3:], H, status, sol)


@dataclass
class ConfinementReport:
    z_max: float
    xiz_ratio_max: float      # max |Xi_z| / |Xi|
    C: float                  # lam * max |Xi_z|/|Xi|
    ok: bool


def confinement_check(traj, lam, z_bound=2.0):
    z_max = float(np.max(np.abs(traj.X[:, 2])))
    ratio = float(np.max(np.abs(traj.Xi[:, 2]) / traj.xi_norm))
    return ConfinementReport(z_max, ratio, lam * ratio, z_max <= z_bound)


def shear_ray(lam, z0=0.0, xiz0=0.0, T=None, tol=1e-9, use_chi=True, n_out=200):
    """The canonical run: X = (0, 1, z0), Xi = (lam, -lam, xiz0), T = 4 / lam by default."""
    T = 4.0 / lam if T is None else T
    st = RayState([0.0, 1.0, z0], [lam, -lam, xiz0])
    return trace_ray(shear_field(use_chi), st, T, tol=tol, n_out=n_out)


def axisym_ray(prof, lam, z0=0.0, xiz0=0.0, T=None, tol=1e-9, n_out=200):
    """Ray started at r = r0 + ell/2 on the x-axis with Xi = (-lam, lam, xiz0)."""
    T = 4.0 / lam if T is None else T
    x0 = prof.r0 + 0.5 * prof.ell
    st = RayState([x0, 0.0, z0], [-lam, lam, xiz0])
    return trace_ray(axisym_field(prof), st, T, tol=tol, n_out=n_out)


def rate_linearity(lams, slopes):
    """Line through the origin fit of slope against lam: (coefficient, R^2)."""
    lams = np.asarray(lams, float)
    slopes = np.asarray(slopes, float)
    k = float(lams @ slopes / (lams @ lams))
    ss_res = float(np.sum((slopes - k * lams) ** 2))
    ss_tot = float(np.sum((slopes - slopes.mean()) ** 2))
    return k, 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
