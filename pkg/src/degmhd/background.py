"""Degenerate radial profiles and the axisymmetric backgrounds.

The E-MHD background Pi(t, r, z) d_theta solves the inviscid Burgers
equation d_t Pi - 2 Pi d_z Pi = 0 at every fixed r, so it is computed
exactly by characteristics.  The Hall background adds the swirl-free
velocity generated by Omega through the stream function,
-(d_r^2 + (3/r) d_r + d_z^2) Phi = Omega, and is stepped with RK4.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline, PchipInterpolator

from . import cylgrid as cg
from .util import cutoff, smooth_step_derivs


class ProfileError(ValueError):
    pass


class ShockError(RuntimeError):
    def __init__(self, t_shock):
        super().__init__(f"characteristics cross at t = {t_shock:.6g}")
        self.t_shock = t_shock


class StepError(RuntimeError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, t_last):
        super().__init__(f"non-finite values after t = {t_last:.6g}")
        self.t_last = t_last


# ------------------------------------------------------------ profiles

@dataclass
class RadialProfile:
    """f(r) with a simple zero at r0 and one length scale ell."""
    ell: float
    r0: float
    kind: str
    closed_form: bool
    _f: object = field(repr=False)
    _df: object = field(repr=False)
    _d2f: object = field(repr=False)

    @property
    def r1(self):
        return self.r0 + self.ell

    def f(self, r):
        return self._f(np.asarray(r, dtype=float))

    def df(self, r):
        return self._df(np.asarray(r, dtype=float))

    def d2f(self, r):
        return self._d2f(np.asarray(r, dtype=float))

    def q(self, r):
        """f'' + 3 f'/r, the coefficient of the zeroth-order term."""
        r = np.asarray(r, dtype=float)
        return self.d2f(r) + 3 * self.df(r) / r

    def samples(self, grid):
        return self.f(grid.r)


def _linear_capped(ell, r0):
    """f = r - r0 on [r0 - ell/2, r1], tapered to zero at r0 - ell and r0 + 2 ell."""
    r1 = r0 + ell

    def parts(r):
        # outer taper on [r1, r1 + ell], inner taper on [r0 - ell, r0 - ell/2]
        So, So1, So2 = smooth_step_derivs((r - r1) / ell)
        Si, Si1, Si2 = smooth_step_derivs((r - (r0 - ell)) / (0.5 * ell))
        w = (1 - So) * Si
        w1 = -So1 / ell * Si + (1 - So) * Si1 / (0.5 * ell)
        w2 = (-So2 / ell**2 * Si - 2 * So1 / ell * Si1 / (0.5 * ell)
              + (1 - So) * Si2 / (0.5 * ell) ** 2)
        x = r - r0
        return x * w, w + x * w1, 2 * w1 + x * w2

    return (lambda r: parts(r)[0], lambda r: parts(r)[1], lambda r: parts(r)[2])


def make_profile(ell, r0, kind="linear-capped", samples=None, grid=None):
    """Build an admissible profile; raises ProfileError naming the broken condition."""
    if not 0 < ell <= 1:
        raise ProfileError("need 0 < ell <= 1")
    if not 2 * ell <= r0 <= 20 * ell:
        raise ProfileError(f"need 2 ell <= r0 <= 20 ell (ell={ell}, r0={r0})")
    if kind == "linear-capped":
        f, df, d2f = _linear_capped(ell, r0)
        prof = RadialProfile(ell, r0, kind, True, f, df, d2f)
    elif kind == "custom":
        if samples is None or grid is None:
            raise ProfileError("custom profiles need samples on a grid")
        cs = CubicSpline(grid.r, np.asarray(samples, dtype=float))
        prof = RadialProfile(ell, r0, kind, False, cs, cs.derivative(1), cs.derivative(2))
    else:
        raise ProfileError(f"unknown profile kind {kind!r}")
    check_profile(prof)
    return prof


def check_profile(prof, n=1000):
    ell, r0, r1 = prof.ell, prof.r0, prof.r1
    if abs(prof.f(r0)) > 1e-12 * max(ell, 1e-300):
        raise ProfileError("f(r0) = 0 violated")
    r_in = np.linspace(r0, r1, n)
    fp = prof.df(r_in)
    if fp.min() < 0.5 - 1e-12 or fp.max() > 1 + 1e-12:
        raise ProfileError("1/2 <= f' <= 1 on [r0, r1] violated")
    r_all = np.linspace(max(r0 - 3 * ell, 1e-9), r0 + 4 * ell, 8 * n)
    fa = prof.f(r_all)
    outside = (r_all < r0 - ell) | (r_all > r0 + 2 * ell)
    if np.abs(fa[outside]).max(initial=0) > 1e-12:
        raise ProfileError("supp f within [r0 - ell, r0 + 2 ell] violated")
    if np.abs(fa).max() > 1 + 1e-12:
        raise ProfileError("||f||_inf <= 1 violated")
    return True


# --------------------------------------------------------- E-MHD (Burgers)

@dataclass
class EmhdBackground:
    grid: cg.RZGrid
    Pi0: object          # callable Pi0(r, z) or samples on grid
    ell: float = 1.0

    def initial_samples(self):
        if callable(self.Pi0):
            R, Z = self.grid.mesh()
            return self.Pi0(R, Z)
        return np.asarray(self.Pi0, dtype=float)


def standard_data(prof):
    """Pi0(r, z) = f(r) chi(z/10) with chi = 1 on |z| <= ell."""
    return lambda r, z: prof.f(r) * cutoff(np.asarray(z) / 10.0, prof.ell)


def shock_time(Pi0, grid=None):
    """(2 max (d_z Pi0)_+)^-1 from samples (or a callable evaluated on grid)."""
    vals = Pi0(*grid.mesh()) if callable(Pi0) else np.asarray(Pi0, dtype=float)
    g = cg.d_z(vals, grid)
    m = g.max()
    return np.inf if m <= 0 else 1.0 / (2 * m)


def burgers_point(Pi0, r, z, t, sup=None, iters=80):
    """Exact Pi(t, r, z) for callable data: bisection for the characteristic foot.

    The foot z0 solves z0 - 2 t Pi0(r, z0) = z and lies in [z - 2tM, z + 2tM]
    with M = sup |Pi0|; before the shock the left side is increasing in z0.
    """
    r, z = np.broadcast_arrays(np.asarray(r, float), np.asarray(z, float))
    if t == 0:
        return Pi0(r, z)
    if sup is None:
        raise ValueError("pass sup = ||Pi0||_inf")
    w = 2 * t * sup
    lo, hi = z - w - 1e-300, z + w
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        g = mid - 2 * t * Pi0(r, mid) - z
        lo = np.where(g < 0, mid, lo)
        hi = np.where(g < 0, hi, mid)
    return Pi0(r, 0.5 * (lo + hi))


def evolve_burgers(bg, t, sup=None):
    """Pi(t) on the grid by characteristics; raises ShockError past the shock."""
    grid = bg.grid
    P0 = bg.initial_samples()
    ts = shock_time(P0, grid)
    if t >= ts:
        raise ShockError(ts)
    if t == 0:
        return P0.copy()
    if callable(bg.Pi0):
        if sup is None:
            sup = _sup_estimate(bg)
        R, Z = grid.mesh()
        return burgers_point(bg.Pi0, R, Z, t, sup)
    out = np.empty_like(P0)
    z0 = grid.z
    for i in range(grid.n_r):
        zt = z0 - 2 * P0[i] * t
        out[i] = PchipInterpolator(zt, P0[i], extrapolate=True)(z0)
    return out


def _sup_estimate(bg):
    """sup |Pi0| on a 4x refined grid, padded slightly."""
    g = bg.grid
    r = np.linspace(g.r[0], g.r[-1], 4 * g.n_r)
    z = np.linspace(-g.z_max, g.z_max, 4 * g.n_z)
    R, Z = np.meshgrid(r, z, indexing="ij")
    return 1.01 * float(np.abs(bg.Pi0(R, Z)).max()) + 1e-300


def finite_speed_check(Pi0_a, Pi0_b, t, grid, tol=0.0):
    """True when solutions agree wherever the data agree on the dependence cone.

    The cone at (r, z) is {r} x [z - 2 t M, z + 2 t M], M the larger sup norm.
    """
    R, Z = grid.mesh()
    r = np.linspace(grid.r[0], grid.r[-1], 4 * grid.n_r)
    zz = np.linspace(-grid.z_max, grid.z_max, 8 * grid.n_z)
    RR, ZZ = np.meshgrid(r, zz, indexing="ij")
    M = 1.01 * max(np.abs(Pi0_a(RR, ZZ)).max(), np.abs(Pi0_b(RR, ZZ)).max()) + 1e-300
    Pa = burgers_point(Pi0_a, R, Z, t, M)
    Pb = burgers_point(Pi0_b, R, Z, t, M)
    # agreement of data on the cone, probed on a fine sub-grid of each cone
    s = np.linspace(-1, 1, 201)
    agree = np.ones(R.shape, dtype=bool)
    for sk in s:
        zc = Z + sk * 2 * t * M
        agree &= Pi0_a(R, zc) == Pi0_b(R, zc)
    return bool(np.all(np.abs(Pa - Pb)[agree] <= tol))


def taylor_residual(Pi_t, Pi0, grid, t, s=0, p=2):
    """||Pi(t) - Pi0 - 2 t Pi0 d_z Pi0||_{W^{s,p}} / t^2."""
    corr = Pi_t - Pi0 - 2 * t * Pi0 * cg.d_z(Pi0, grid)
    return cg.sobolev_norm(cg.ScalarField(grid, corr), s, p) / t**2


def lemma_window_defect(prof, grid, t):
    """max |chi(z) d_z Pi(t)| for the standard data; zero for t <= 4 ell."""
    bg = EmhdBackground(grid, standard_data(prof), prof.ell)
    P = evolve_burgers(bg, t)
    return float(np.abs(cutoff(grid.z, prof.ell)[None, :] * cg.d_z(P, grid)).max())


# ------------------------------------------------------------ stream function

@lru_cache(maxsize=8)
def _stream_factor(grid):
    n_r, n_z = grid.n_r, grid.n_z
    nzi = n_z - 2                  # z end nodes carry Phi = 0
    dr, dz = grid.dr, grid.dz
    r = grid.r
    idx = lambda i, k: i * nzi + k
    rows, cols, vals = [], [], []

    def add(i, k, j, c):
        rows.append(idx(i, k)); cols.append(j); vals.append(c)

    for i in range(n_r):
        cm = 1 / dr**2 - 1.5 / (r[i] * dr)
        cp = 1 / dr**2 + 1.5 / (r[i] * dr)
        for k in range(nzi):
            diag = -2 / dr**2 - 2 / dz**2
            if i == 0:
                diag += cm             # even ghost Phi_{-1} = Phi_0
            else:
                add(i, k, idx(i - 1, k), -cm)
            if i == n_r - 1:
                diag -= cp             # Dirichlet at r_max: ghost = -Phi
            else:
                add(i, k, idx(i + 1, k), -cp)
            if k > 0:
                add(i, k, idx(i, k - 1), -1 / dz**2)
            if k < nzi - 1:
                add(i, k, idx(i, k + 1), -1 / dz**2)
            add(i, k, idx(i, k), -diag)
    A = sp.csc_matrix((vals, (rows, cols)), shape=(n_r * nzi,) * 2)
    return A, spla.splu(A)


def stream_operator(grid):
    """The sparse matrix of -slashed-Laplacian on interior z nodes."""
    return _stream_factor(grid)[0]


def stream_solve(Omega, grid, m=0):
    """Solve -(d_r^2 + 3/r d_r + d_z^2) Phi = Omega, Phi = 0 on the outer boundary."""
    if m != 0:
        raise ValueError("only the axisymmetric stream function (m = 0) is needed")
    Omega = np.asarray(Omega, dtype=float)
    _, lu = _stream_factor(grid)
    rhs = Omega[:, 1:-1].ravel()
    phi = np.zeros_like(Omega)
    sol = lu.solve(rhs)
    if not np.all(np.isfinite(sol)):
        raise np.linalg.LinAlgError("stream function solve failed")
    phi[:, 1:-1] = sol.reshape(grid.n_r, grid.n_z - 2)
    return phi


def velocity_from_stream(Phi, grid):
    R = grid.r[:, None]
    Vr = -R * cg.d_z(Phi, grid)
    Vz = 2 * Phi + R * cg.d_r(Phi, grid, 1)
    return Vr, Vz


# ----------------------------------------------------------------- Hall

@dataclass
class HallBackground:
    grid: cg.RZGrid
    Omega: np.ndarray
    Pi: np.ndarray
    nu: float = 0.0
    t: float = 0.0
    filter_coeff: float = 1e-2
    advect_velocity: bool = True   # False gives the discrete E-MHD evolution

    def stream(self):
        return stream_solve(self.Omega, self.grid)

    def velocity(self):
        return velocity_from_stream(self.stream(), self.grid)


@dataclass
class HallTrajectory:
    times: list
    Omega: list
    Pi: list
    Vr: list
    Vz: list
    norms: dict


def _hall_rhs(Om, Pi, grid, nu, advect):
    dzPi = cg.d_z(Pi, grid)
    if advect:
        Vr, Vz = velocity_from_stream(stream_solve(Om, grid), grid)
        adv_O = Vr * cg.d_r(Om, grid, 1) + Vz * cg.d_z(Om, grid)
        adv_P = Vr * cg.d_r(Pi, grid, 1) + Vz * dzPi
    else:
        adv_O = adv_P = 0.0
    dO = -adv_O - 2 * Pi * dzPi
    if nu:
        dO = dO + nu * cg.slashed_laplacian(cg.ScalarField(grid, Om)).values
    dP = -adv_P + 2 * Pi * dzPi
    return dO, dP


def _hyper_filter(a, c):
    """a - c * (undivided 4th differences in r and z), even ghosts at the axis."""
    if c == 0:
        return a
    out = a.copy()
    ap = np.concatenate([a[1::-1], a], axis=0)           # two even ghosts
    d4r = ap[:-4] - 4 * ap[1:-3] + 6 * ap[2:-2] - 4 * ap[3:-1] + ap[4:]
    out[:-2] -= c * d4r
    d4z = a[:, :-4] - 4 * a[:, 1:-3] + 6 * a[:, 2:-2] - 4 * a[:, 3:-1] + a[:, 4:]
    out[:, 2:-2] -= c * d4z
    return out


def hall_step(bg, dt):
    g, nu = bg.grid, bg.nu
    Vr, Vz = bg.velocity() if bg.advect_velocity else (0.0, 0.0)
    vmax = max(np.abs(Vr).max(initial=0), np.abs(Vz).max(initial=0), 2 * np.abs(bg.Pi).max())
    h = min(g.dr, g.dz)
    if vmax * dt > h * (1 + 1e-12):
        raise StepError(f"CFL violated: dt={dt:.3g} > {h / vmax:.3g}")
    if nu * dt > 0.25 * h**2:
        raise StepError("viscous step restriction nu dt <= h^2/4 violated")
    f = lambda O, P: _hall_rhs(O, P, g, nu, bg.advect_velocity)
    O, P = bg.Omega, bg.Pi
    k1 = f(O, P)
    k2 = f(O + 0.5 * dt * k1[0], P + 0.5 * dt * k1[1])
    k3 = f(O + 0.5 * dt * k2[0], P + 0.5 * dt * k2[1])
    k4 = f(O + dt * k3[0], P + dt * k3[1])
    On = O + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    Pn = P + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    On = _hyper_filter(On, bg.filter_coeff)
    if not (np.all(np.isfinite(On)) and np.all(np.isfinite(Pn))):
        raise DivergenceError(bg.t)
    return HallBackground(g, On, Pn, nu, bg.t + dt, bg.filter_coeff, bg.advect_velocity)


def hm_norm_theta(Pi, grid, m):
    """H^m norm of Pi d_theta through its physical component r Pi."""
    return cg.sobolev_norm(cg.AxiVectorField(grid, 0 * Pi, Pi, 0 * Pi), m, 2)


def grad_velocity_norm(Vr, Vz, grid):
    """||grad V||_{L^2} for swirl-free axisymmetric V (includes the V^r/r term)."""
    w = 2 * np.pi * grid.weights
    R = grid.r[:, None]
    terms = [cg.d_r(Vr, grid, -1), cg.d_z(Vr, grid), Vr / R, cg.d_r(Vz, grid, 1), cg.d_z(Vz, grid)]
    return float(np.sqrt(sum(np.sum(t**2 * w) for t in terms)))


def evolve_hall(bg, dt, T, save_times=None, norm_orders=(1, 2, 3, 4)):
    """RK4 trajectory; snapshots at save_times (default: every step)."""
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(T, 1):
        raise ValueError("T must be a multiple of dt")
    save = None if save_times is None else sorted(save_times)
    traj = HallTrajectory([], [], [], [], [], {m: [] for m in norm_orders})

    def record(b):
        traj.times.append(b.t)
        traj.Omega.append(b.Omega.copy())
        traj.Pi.append(b.Pi.copy())
        Vr, Vz = b.velocity()
        traj.Vr.append(Vr)
        traj.Vz.append(Vz)
        for m in norm_orders:
            traj.norms[m].append(hm_norm_theta(b.Pi, b.grid, m))

    if save is None or any(abs(s) < 1e-14 for s in save):
        record(bg)
    for k in range(1, n + 1):
        bg = hall_step(bg, dt)
        if save is None or any(abs(s - bg.t) < 0.5 * dt for s in save):
            record(bg)
    return traj


def apriori_monitor(norm_history, limit=10.0):
    """sup_t ||Pi(t)||_{H^m} / ||Pi(0)||_{H^m} and a flag above limit."""
    h = np.asarray(norm_history, dtype=float)
    ratio = float(h.max() / h[0]) if h[0] > 0 else (0.0 if h.max() == 0 else np.inf)
    return {"ratio": ratio, "flag": ratio > limit}


def hall_small_time(prof, n_r=96, n_z=192, times=None, dt=None):
    """Small-time Hall vs E-MHD comparison: returns t, ||grad V||, ||Pi - Pi^e||."""
    ell = prof.ell
    if times is None:
        times = ell * 2.0 ** np.arange(-8, -3)
    times = np.asarray(times, dtype=float)
    if dt is None:
        dt = times[0] / 4
    grid = cg.RZGrid(prof.r0 + 3 * ell, n_r, 24 * ell, n_z)
    R, Z = grid.mesh()
    P0 = standard_data(prof)(R, Z)
    hall = HallBackground(grid, np.zeros_like(P0), P0.copy())
    emhd = HallBackground(grid, np.zeros_like(P0), P0.copy(), advect_velocity=False)
    out_t, gv, dpi, vinf, divv = [], [], [], [], []
    w = 2 * np.pi * grid.weights
    t = 0.0
    for target in times:
        while t < target - 0.5 * dt:
            hall = hall_step(hall, dt)
            emhd = hall_step(emhd, dt)
            t = hall.t
        Vr, Vz = hall.velocity()
        out_t.append(t)
        gv.append(grad_velocity_norm(Vr, Vz, grid))
        dpi.append(float(np.sqrt(np.sum((hall.Pi - emhd.Pi) ** 2 * R**2 * w))))
        vinf.append(float(max(np.abs(Vr).max(), np.abs(Vz).max())))
        dv = cg.d_r(R * Vr, grid, 1) / R + cg.d_z(Vz, grid)
        divv.append(float(np.abs(dv[:-1, 1:-1]).max()))
    return {"t": np.array(out_t), "gradV": np.array(gv), "dPi": np.array(dpi),
            "Vinf": np.array(vinf), "divV": np.array(divv), "grid": grid}
