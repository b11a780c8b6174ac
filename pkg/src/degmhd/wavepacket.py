"""Degenerating wave packets around a vanishing swirl f(r) d_theta.

Coordinates: eta(r) with eta' = 1/f, eta(r1) = 0, tau = lam t.  The packet is

    psi~ = Re[lam^-1 l (f/r)^(1/2) h(tau, eta) e^{i lam (theta + Phi)}]
    b~z  = -(i lam f)^-1 d_t psi~

with the explicit phase Phi = tau + eta + int_{-inf}^eta (c - 1), c = (1 - f_*^2)^(1/2),
f_* = f/r, and h transported by h_tau - c h_eta = c' h / 2.

Along characteristics dY/dtau = -c the quantity h c^(1/2) is conserved, and
the foot of the characteristic through (tau, eta) is X = T^-1(T(eta) + tau)
with the travel time T(eta) = int deta / c.  This gives h and its eta
derivatives in closed form; tau derivatives follow from the transport equation.

All amplitudes below are stored with the phase e^{i lam Phi} included and the
angular factor e^{i lam theta} implicit (ModeField convention).
"""

from dataclasses import dataclass, field, replace
import warnings

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.special import roots_legendre

from .background import ProfileError
from .cylgrid import ModeField, RGrid, ScalarField, lp_norm_of, mixed_norm, sobolev_norm
from .util import bump, fit_slope
from . import modeops

F_FLOOR = 1e-12


# ----------------------------------------------------------------- chart

def _gauss_cumulative(fun, nodes, order=8):
    """Cumulative integral of fun over consecutive node intervals (Gauss-Legendre)."""
    x, w = roots_legendre(order)
    a, b = nodes[:-1, None], nodes[1:, None]
    pts = 0.5 * (b - a) * x[None] + 0.5 * (a + b)
    vals = fun(pts)
    seg = 0.5 * (b[:, 0] - a[:, 0]) * (vals @ w)
    return np.concatenate([[0.0], np.cumsum(seg)])


class EtaChart:
    """eta(r) on (r0, r0 + s_max-range], eta(r1) = 0, eta' = 1/f.

    For eta below eta_min (where f < f_floor) the chart sets f_* = 0, so
    characteristics there are straight lines of unit speed.
    """

    def __init__(self, prof, f_floor=F_FLOOR, n_nodes=6000):
        self.prof = prof
        self.f_floor = f_floor
        ell, r0 = prof.ell, prof.r0
        self.closed_form = prof.kind == "linear-capped"

        # log-distance coordinate s: r = r0 + ell e^s
        s_test = np.linspace(-40.0, 0.0, 4001)
        f_test = prof.f(r0 + ell * np.exp(s_test))
        if np.any(f_test[s_test > -30] <= 0):
            raise ProfileError("f <= 0 somewhere on (r0, r1]")
        below = np.nonzero(f_test < f_floor)[0]
        s_min = s_test[below[-1]] if below.size else -40.0
        s_max = np.log(1.5)
        if np.any(prof.f(r0 + ell * np.linspace(1.0, 1.5, 200)) <= 0):
            s_max = 0.0
        self.s_min, self.s_max = float(s_min), float(s_max)

        if self.closed_form:
            # f = r - r0 on [r0 - ell/2, r1]: eta = ln((r - r0)/ell) there
            self.eta_min = float(np.log(f_floor / ell))
            self.eta_max = 0.0
            s_nodes = np.linspace(self.eta_min, s_max, n_nodes)
            eta_nodes = self._integrate_eta(s_nodes)
        else:
            s_nodes = np.linspace(s_min, s_max, n_nodes)
            eta_nodes = self._integrate_eta(s_nodes)
            self.eta_min = float(eta_nodes[0])
            self.eta_max = float(eta_nodes[-1])
        g = ell * np.exp(s_nodes) / prof.f(r0 + ell * np.exp(s_nodes))
        self._eta_of_s = CubicHermiteSpline(s_nodes, eta_nodes, g)
        self._s_of_eta = CubicHermiteSpline(eta_nodes, s_nodes, 1.0 / g)
        self.eta_top = float(eta_nodes[-1])

        # phase integral I and travel-time correction J on uniform eta nodes
        en = np.linspace(self.eta_min, self.eta_top, n_nodes)
        cm1 = lambda e: self._cminus1(e)
        im1 = lambda e: 1.0 / (1.0 + self._cminus1(e)) - 1.0
        I = _gauss_cumulative(cm1, en)
        J = _gauss_cumulative(im1, en)
        fs0 = float(self.coeffs(np.array([self.eta_min]), minimal=True)[0])
        self._tail = -0.25 * fs0**2
        self._I = CubicHermiteSpline(en, I, cm1(en))
        self._J = CubicHermiteSpline(en, J, im1(en))
        co = self.coeffs(en)
        self._c = CubicHermiteSpline(en, co["c"], co["c1"])
        self._nodes = en

    def _integrate_eta(self, s_nodes):
        ell, r0 = self.prof.ell, self.prof.r0
        if self.closed_form:
            out = s_nodes.copy()
            hi = s_nodes > 0
            if np.any(hi):
                fun = lambda s: ell * np.exp(s) / self.prof.f(r0 + ell * np.exp(s))
                sub = np.concatenate([[0.0], s_nodes[hi]])
                out[hi] = _gauss_cumulative(fun, sub)[1:]
            return out
        fun = lambda s: ell * np.exp(s) / self.prof.f(r0 + ell * np.exp(s))
        cum = _gauss_cumulative(fun, s_nodes)
        zero = CubicSpline(s_nodes, cum)(0.0)
        return cum - zero

    # -- maps
    def r(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.closed_form:
            return np.where(eta <= 0, self.prof.r0 + self.prof.ell * np.exp(np.minimum(eta, 0)),
                            self.prof.r0 + self.prof.ell * np.exp(self._s_of_eta(np.clip(eta, 0, self.eta_top))))
        e = np.clip(eta, self.eta_min, self.eta_top)
        s = self._s_of_eta(e) + np.minimum(eta - self.eta_min, 0.0)
        return self.prof.r0 + self.prof.ell * np.exp(s)

    def eta(self, r):
        r = np.asarray(r, dtype=float)
        d = r - self.prof.r0
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.log(d / self.prof.ell)
        if self.closed_form:
            out = np.where(s <= 0, s, self._eta_of_s(np.clip(s, 0, self.s_max)))
        else:
            out = np.where(s < self.s_min, self.eta_min + (s - self.s_min),
                           self._eta_of_s(np.clip(s, self.s_min, self.s_max)))
        return np.where(d > 0, out, -np.inf)

    # -- coefficients
    def _cminus1(self, eta):
        fs = self.coeffs(eta, minimal=True)
        return -fs**2 / (1.0 + np.sqrt(1.0 - fs**2))

    def coeffs(self, eta, minimal=False):
        """f_*, c and their eta derivatives, plus f, f', f'', q at r(eta)."""
        eta = np.asarray(eta, dtype=float)
        r = self.r(eta)
        prof = self.prof
        f = prof.f(r)
        live = eta >= self.eta_min
        fs = np.where(live, f / r, 0.0)
        if np.any(fs >= 1):
            raise ProfileError("|f_*| >= 1: profile not admissible")
        if minimal:
            return fs
        fp, fpp = prof.df(r), prof.d2f(r)
        fs1 = np.where(live, fs * (fp - fs), 0.0)
        fs2 = np.where(live, fs1 * (fp - fs) + fs * (fpp * f - fs1), 0.0)
        c = np.sqrt(1.0 - fs**2)
        c1 = -fs * fs1 / c
        c2 = -(fs1**2 + fs * fs2) / c - fs**2 * fs1**2 / c**3
        return dict(r=r, f=f, fp=fp, fpp=fpp, q=fpp + 3 * fp / r,
                    fs=fs, fs1=fs1, fs2=fs2, c=c, c1=c1, c2=c2)

    def c(self, eta):
        eta = np.asarray(eta, dtype=float)
        return np.where(eta < self.eta_min, 1.0, self._c(np.minimum(eta, self.eta_top)))

    def phase_integral(self, eta):
        """int_{-inf}^eta (c - 1)."""
        eta = np.asarray(eta, dtype=float)
        inside = self._I(np.clip(eta, self.eta_min, self.eta_top)) + self._tail
        return np.where(eta < self.eta_min, self._tail * np.exp(2 * (eta - self.eta_min)), inside)

    def travel(self, eta):
        """T(eta) = eta + int_{eta_min}^eta (1/c - 1)."""
        eta = np.asarray(eta, dtype=float)
        J = self._J(np.clip(eta, self.eta_min, self.eta_top))
        over = np.maximum(eta - self.eta_top, 0.0)
        J = J + over * (1.0 / self.c(self.eta_top) - 1.0)
        return eta + np.where(eta < self.eta_min, 0.0, J)

    def travel_inverse(self, T, guess=None, iters=12):
        T = np.asarray(T, dtype=float)
        X = T.copy() if guess is None else np.asarray(guess, dtype=float).copy()
        for _ in range(iters):
            X = X - (self.travel(X) - T) * self.c(X)
        return X

    def decay_bound_holds(self, factor=1.0 / 3.0, n=2000):
        """Empirical check of f_* <= factor e^eta on [eta_min, 0]."""
        e = np.linspace(max(self.eta_min, -30.0), 0.0, n)
        fs = self.coeffs(e, minimal=True)
        excess = fs - factor * np.exp(e)
        return bool(np.all(excess <= 1e-14)), float(np.max(fs * np.exp(-e)))


def build_eta(prof, f_floor=F_FLOOR):
    return EtaChart(prof, f_floor=f_floor)


def phase(chart, tau, eta):
    eta = np.asarray(eta, dtype=float)
    return tau + eta + chart.phase_integral(eta)


def hj_residual(chart, eta, tau=0.0, h=1e-4):
    """Sup of |-(Phi_tau)^2 + (Phi_eta)^2 + f_*^2| by centred differences."""
    eta = np.asarray(eta, dtype=float)
    pt = (phase(chart, tau + h, eta) - phase(chart, tau - h, eta)) / (2 * h)
    pe = (phase(chart, tau, eta + h) - phase(chart, tau, eta - h)) / (2 * h)
    fs = chart.coeffs(eta, minimal=True)
    return float(np.max(np.abs(-pt**2 + pe**2 + fs**2)))


# --------------------------------------------------------------- envelope

@dataclass
class InitialEnvelope:
    """h0 with its first two derivatives and a support interval (a, b)."""
    value: object
    d1: object
    d2: object
    support: tuple

    @classmethod
    def bump(cls, a, b, normalize=True):
        k = 2.0 / (b - a)

        def parts(eta):
            x = k * (np.asarray(eta, dtype=float) - a) - 1.0
            B = bump(x)
            inside = np.abs(x) < 1
            u = np.where(inside, 1 - x**2, 1.0)
            g = -2 * x / u**2
            g1 = -2 / u**2 - 8 * x**2 / u**3
            return B, np.where(inside, B * g * k, 0.0), np.where(inside, B * (g**2 + g1) * k**2, 0.0)

        scale = 1.0
        if normalize:
            xs, ws = roots_legendre(200)
            e = 0.5 * (b - a) * xs + 0.5 * (a + b)
            scale = 1.0 / np.sqrt(0.5 * (b - a) * np.sum(ws * parts(e)[0] ** 2))
        return cls(lambda e: scale * parts(e)[0], lambda e: scale * parts(e)[1],
                   lambda e: scale * parts(e)[2], (float(a), float(b)))

    @classmethod
    def from_samples(cls, eta, values):
        eta = np.asarray(eta, dtype=float)
        values = np.asarray(values, dtype=float)
        nz = np.nonzero(values)[0]
        if nz.size == 0:
            return cls(lambda e: np.zeros_like(np.asarray(e, float)), lambda e: np.zeros_like(np.asarray(e, float)),
                       lambda e: np.zeros_like(np.asarray(e, float)), (float(eta[0]), float(eta[-1])))
        cs = CubicSpline(eta, values, bc_type="clamped")
        lo, hi = eta[0], eta[-1]

        def wrap(fn):
            return lambda e: np.where((np.asarray(e) >= lo) & (np.asarray(e) <= hi),
                                      fn(np.clip(e, lo, hi)), 0.0)
        a = float(eta[max(nz[0] - 1, 0)])
        b = float(eta[min(nz[-1] + 1, eta.size - 1)])
        return cls(wrap(cs), wrap(cs.derivative(1)), wrap(cs.derivative(2)), (a, b))

    def l2(self, n=4000):
        a, b = self.support
        e = np.linspace(a, b, n)
        return float(np.sqrt(np.trapezoid(self.value(e) ** 2, e)))


def envelope_exact(chart, h0, tau, eta):
    """h, h_eta, h_etaeta at (tau, eta) via the foot map and conservation of h c^(1/2)."""
    eta = np.asarray(eta, dtype=float)
    X = chart.travel_inverse(chart.travel(eta) + tau, guess=eta + tau)
    cx = chart.coeffs(X)
    ce = chart.coeffs(eta)
    rho = cx["c"] / ce["c"]
    D = (cx["c1"] - ce["c1"]) / ce["c"]
    D1 = (cx["c2"] * rho - ce["c2"]) / ce["c"] - D * ce["c1"] / ce["c"]
    H, H1, H2 = h0.value(X), h0.d1(X), h0.d2(X)
    sr = np.sqrt(rho)
    h = H * sr
    h_e = sr * (H1 * rho + 0.5 * H * D)
    h_ee = sr * (H2 * rho**2 + 2 * H1 * rho * D + 0.25 * H * D**2 + 0.5 * H * D1)
    return h, h_e, h_ee, ce


@dataclass
class EnvelopeSlices:
    """Forward characteristic integration: slice k holds (Y_k, h_k) at tau_k."""
    taus: np.ndarray
    Y: np.ndarray
    H: np.ndarray

    def resample(self, k, eta):
        Y, H = self.Y[k], self.H[k]
        cs = CubicSpline(Y, H)
        eta = np.asarray(eta, dtype=float)
        return np.where((eta >= Y[0]) & (eta <= Y[-1]), cs(np.clip(eta, Y[0], Y[-1])), 0.0)

    def support(self, k, tol=0.0):
        nz = np.nonzero(np.abs(self.H[k]) > tol)[0]
        return float(self.Y[k][nz[0]]), float(self.Y[k][nz[-1]])

    def l2(self, k):
        return float(np.sqrt(np.trapezoid(self.H[k] ** 2, self.Y[k])))


def solve_envelope(h0, chart, tau_max, n_seeds=801, d_eta=None):
    """RK4 along dY/dtau = -c from seeds on supp h0, amplitude h c^(1/2) conserved.

    Slices are stored every min(0.05, d_eta/2) in tau, d_eta being the
    resolution of the eta grid the slices will be resampled to.
    """
    if not callable(getattr(h0, "value", None)):
        h0 = InitialEnvelope.from_samples(*h0)
    a, b = h0.support
    X = np.linspace(a, b, n_seeds)
    if d_eta is None:
        d_eta = 0.1
    dtau = min(0.05, 0.5 * d_eta)
    n_slices = int(np.ceil(tau_max / dtau))
    taus = np.linspace(0.0, tau_max, n_slices + 1)
    cX = chart.c(X)
    h0v = h0.value(X)
    Ys, Hs = [X.copy()], [h0v.copy()]
    Y = X.copy()
    sub = max(1, int(np.ceil((taus[1] - taus[0]) / 0.01))) if n_slices else 1
    for k in range(n_slices):
        dt = (taus[k + 1] - taus[k]) / sub
        for _ in range(sub):
            k1 = -chart.c(Y)
            k2 = -chart.c(Y + 0.5 * dt * k1)
            k3 = -chart.c(Y + 0.5 * dt * k2)
            k4 = -chart.c(Y + dt * k3)
            Y = Y + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        Ys.append(Y.copy())
        Hs.append(h0v * np.sqrt(cX / chart.c(Y)))
    return EnvelopeSlices(taus, np.array(Ys), np.array(Hs))


# ---------------------------------------------------------------- packets

@dataclass
class PacketSlice:
    """Assembled packet fields at one time on eta nodes (mode lam)."""
    lam: int
    t: float
    tau: float
    eta: np.ndarray
    r: np.ndarray
    f: np.ndarray
    weights: np.ndarray
    psi: np.ndarray
    dpsi_r: np.ndarray
    bz: np.ndarray
    d_bz: np.ndarray       # d_r b~z
    d2psi_r: np.ndarray    # d_r^2 psi~
    lap_psi: np.ndarray
    err_bz: np.ndarray
    h: np.ndarray

    @property
    def dpsi_th(self):
        return 1j * self.lam * self.psi / self.r

    def b_components(self):
        """Physical (b^r, b^theta, b^z) = (r^-1 d_theta psi, -d_r psi, b^z)."""
        return [self.dpsi_th, -self.dpsi_r, self.bz]

    def _b_family(self):
        r, lam = self.r, self.lam
        comps = self.b_components()
        d_br = 1j * lam * (self.dpsi_r / r - self.psi / r**2)
        dr = [d_br, -self.d2psi_r, self.d_bz]
        dth = [1j * lam * c / r for c in comps]
        return [comps, dr, dth]

    def mode(self, comps):
        return ModeField(self.lam, np.array(comps), self.r, self.weights)

    def l2(self):
        return lp_norm_of(self.b_components(), self.weights, self.lam, 2)

    def psi_l2(self):
        return lp_norm_of([self.psi], self.weights, self.lam, 2)

    def mixed(self, p):
        """||b~z||_{L2_theta L^p_rdr} + ||grad psi~||_{L2_theta L^p_rdr}."""
        return (mixed_norm(self.mode([self.bz]), p)
                + mixed_norm(self.mode([self.dpsi_r, self.dpsi_th]), p))

    def w1p(self, p):
        vals = [lp_norm_of(terms, self.weights, self.lam, p) for terms in self._b_family()]
        if np.isinf(p):
            return max(vals)
        return float(np.sum(np.array(vals) ** p) ** (1.0 / p))

    def h1(self):
        return self.w1p(2)

    def err_l2(self):
        return lp_norm_of([self.err_bz], self.weights, self.lam, 2)

    def support(self, tol=0.0):
        nz = np.nonzero(np.abs(self.h) > tol)[0]
        if nz.size == 0:
            return (np.nan, np.nan)
        return float(self.eta[nz[0]]), float(self.eta[nz[-1]])


def _trap_weights(x):
    w = np.zeros_like(x)
    d = np.diff(x)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


@dataclass
class WavePacket:
    prof: object
    lam: int
    h0: InitialEnvelope = None
    chart: EtaChart = None
    mu: float = 1.0
    points_per_wave: int = 24

    def __post_init__(self):
        if self.chart is None:
            self.chart = build_eta(self.prof)
        if self.h0 is None:
            self.h0 = default_h0(self.chart)
        if self.lam * self.prof.ell < 8:
            warnings.warn(f"lam * ell = {self.lam * self.prof.ell:g} < 8; packet is poorly localized")

    @property
    def ell(self):
        return self.prof.ell

    def g0(self, r):
        """g0(r) = (f/r)^(1/2) h0(eta(r)), zero off (r0, r1]."""
        r = np.asarray(r, dtype=float)
        inside = (r > self.prof.r0) & (r <= self.prof.r1 * (1 + 1e-12))
        rr = np.where(inside, r, self.prof.r1)
        val = np.sqrt(self.prof.f(rr) / rr) * self.h0.value(self.chart.eta(rr))
        return np.where(inside, val, 0.0)

    def g0_norm(self, s=0, n=6000):
        grid = RGrid(self.prof.r1 + 0.5 * self.prof.ell, n)
        return sobolev_norm(ScalarField(grid, self.g0(grid.r), 0), s, 2)

    def support(self, tau):
        """Exact eta-support of h(tau) from the forward images of supp h0."""
        a, b = self.h0.support
        ch = self.chart
        T = ch.travel(np.array([a, b])) - tau
        lo, hi = ch.travel_inverse(T, guess=np.array([a, b]) - tau)
        return float(lo), float(hi)

    def slice(self, t, eta=None, n=None, weights=None):
        lam, ell, mu = self.lam, self.ell, self.mu
        tau = lam * mu * t
        if eta is None:
            lo, hi = self.support(tau)
            if n is None:
                n = int(max(1024, self.points_per_wave * lam * (hi - lo) / (2 * np.pi) * 2))
            eta = np.linspace(lo, hi, n)
        eta = np.asarray(eta, dtype=float)
        h, h_e, h_ee, co = envelope_exact(self.chart, self.h0, tau, eta)
        r, f, fp, q = co["r"], co["f"], co["fp"], co["q"]
        fs, fs1, fs2 = co["fs"], co["fs1"], co["fs2"]
        c, c1, c2 = co["c"], co["c1"], co["c2"]
        if np.any((f < self.chart.f_floor) & (h != 0)):
            raise ProfileError("packet support reached f < f_floor")
        fsafe = np.where(f > 0, f, 1.0)
        if weights is None:
            weights = r * f * _trap_weights(eta)

        # tau derivatives from the transport equation
        h_t = c * h_e + 0.5 * c1 * h
        h_te = c1 * h_e + c * h_ee + 0.5 * c2 * h + 0.5 * c1 * h_e
        h_tt = c**2 * h_ee + 2 * c * c1 * h_e + (0.5 * c * c2 + 0.25 * c1**2) * h

        w = np.sqrt(fs)
        wsafe = np.where(w > 0, w, 1.0)
        w1 = np.where(w > 0, 0.5 * fs1 / wsafe, 0.0)
        w2 = np.where(w > 0, 0.5 * fs2 / wsafe - 0.25 * fs1**2 / wsafe**3, 0.0)
        wh = w * h
        wh_e = w1 * h + w * h_e
        wh_ee = w2 * h + 2 * w1 * h_e + w * h_ee

        e = np.exp(1j * lam * phase(self.chart, tau, eta))
        a, a_e, a_ee = ell * wh / lam, ell * wh_e / lam, ell * wh_ee / lam
        psi = a * e
        P = (a_e + 1j * lam * c * a) / fsafe            # d_r psi = P e
        P_e = (a_ee + 1j * lam * (c1 * a + c * a_e)) / fsafe - (a_e + 1j * lam * c * a) * fp / fsafe
        dpsi_r = P * e
        d2psi_r = (P_e + 1j * lam * c * P) * e / fsafe

        wf = w / fsafe
        wf_e = w1 / fsafe - w * fp / fsafe
        Bh = -ell * wf * (h - 1j * h_t / lam)
        Bh_e = -ell * (wf_e * (h - 1j * h_t / lam) + wf * (h_e - 1j * h_te / lam))
        bz = Bh * e
        d_bz = (Bh_e + 1j * lam * c * Bh) * e / fsafe

        psi_e = (a_e + 1j * lam * c * a) * e
        psi_ee = (a_ee + 2j * lam * c * a_e + 1j * lam * c1 * a - lam**2 * c**2 * a) * e
        lap_psi = (psi_ee + (fs - fp) * psi_e) / fsafe**2 - lam**2 * psi / r**2

        bracket = w * h_tt - wh_ee - (fs - fp) * wh_e + f * q * wh
        err_bz = mu * (1j * ell / fsafe) * e * bracket

        return PacketSlice(lam, float(t), float(tau), eta, r, f, np.asarray(weights, float),
                           psi, dpsi_r, bz, d_bz, d2psi_r, lap_psi, err_bz, h)


def default_h0(chart):
    """Canonical bump, placed so that supp g0 lies in ((r0 + r1)/2, r1)."""
    prof = chart.prof
    eta_half = float(chart.eta(0.5 * (prof.r0 + prof.r1)))
    return InitialEnvelope.bump(max(eta_half, -1.0), 0.0)


def assemble(prof, lam, t, h0=None, chart=None, **kw):
    return WavePacket(prof, lam, h0=h0, chart=chart).slice(t, **kw)


def rescale_packet(packet, mu):
    """Packet for the profile mu f: same data with time running mu times faster."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    return replace(packet, mu=packet.mu * mu)


# ------------------------------------------------------------ diagnostics

@dataclass
class DegenerationFit:
    p: float
    lam: int
    slope: float
    intercept: float
    kappa: float
    t: np.ndarray
    values: np.ndarray


def degeneration_rate(packet, p, t_samples):
    t = np.asarray(t_samples, dtype=float)
    if t.size < 4:
        raise ValueError("degeneration_rate needs at least 4 time samples")
    vals = np.array([packet.slice(ti).mixed(p) for ti in t])
    slope, icpt = fit_slope(t, np.log(vals))
    ex = 1.0 / p - 0.5
    kappa = -slope / (ex * packet.lam * packet.mu) if ex > 0 else np.nan
    return DegenerationFit(p, packet.lam, slope, icpt, kappa, t, vals)


@dataclass
class PacketErrorReport:
    t: float
    err_l2: float
    g0_h2: float
    ratio: float
    h1: float


def packet_error(packet, t, g0_h2=None):
    s = packet.slice(t)
    if g0_h2 is None:
        g0_h2 = packet.g0_norm(2)
    e = s.err_l2()
    return PacketErrorReport(float(t), e, g0_h2, e / g0_h2, s.h1())


def fd_error_oracle(packet, t, dt=None, n=16384):
    """err_b~z by direct substitution: d_t b~z from centred time differences and
    Delta psi~ from second-order differences in r on the packet nodes."""
    lam, mu = packet.lam, packet.mu
    s0 = packet.slice(t, n=n)
    if dt is None:
        dt = 1e-3 / (lam**2 * mu)
    sp_ = packet.slice(t + dt, eta=s0.eta)
    sm = packet.slice(t - dt, eta=s0.eta)
    dbz = (sp_.bz - sm.bz) / (2 * dt)
    r = s0.r
    mesh = modeops.RadialMesh.from_nodes(r)
    lap = modeops.apply_laplacian(mesh, lam, s0.psi)
    q = packet.prof.q(r)
    f = mu * s0.f
    err = dbz - 1j * lam * f * lap + 1j * lam * mu * q * s0.psi
    return err, s0


@dataclass
class HallPacket:
    packet: WavePacket
    nu: float

    def uz(self, s):
        return -s.psi

    def omega(self, s):
        return -s.bz


@dataclass
class HallReport:
    t: float
    identity_residual: float   # ||errh_u - nu Lap psi|| / ||d_t psi||
    errh_u: float
    nu_lap_psi: float
    uz_l2: float
    grad_uz_l2: float
    omega_l2: float
    smoothing: float           # ||u~z|| + ||grad_perp (-Lap)^-1 omega~||
    b_l2: float
    g0_h1: float


def hall_companion(packet, t, nu=0.0, dt=None):
    """u~z = -psi~, omega~ = -b~z, with the companion identity and smoothing norms."""
    hp = HallPacket(packet, nu)
    lam, mu = packet.lam, packet.mu
    s = packet.slice(t)
    if dt is None:
        dt = 1e-3 / (lam**2 * mu)
    sp_ = packet.slice(t + dt, eta=s.eta)
    sm = packet.slice(t - dt, eta=s.eta)
    dpsi_t = (sp_.psi - sm.psi) / (2 * dt)
    f = mu * s.f
    u = hp.uz(s)
    # errh_u = d_t u - f d_theta b - nu Lap u
    errh_u = -dpsi_t - 1j * lam * f * s.bz + nu * s.lap_psi
    W, m = s.weights, lam
    nrm = lambda a: lp_norm_of([a], W, m, 2)
    resid = nrm(errh_u - nu * s.lap_psi) / max(nrm(dpsi_t), 1e-300)

    # (-Lap)^-1 omega on a log mesh wide enough for the nonlocal tail
    prof = packet.prof
    lo, hi = packet.support(lam * mu * t)
    xi_lo = lo - 6.0
    n = int(max(2000, 30 * lam * (0.0 - xi_lo) / (2 * np.pi) * 2))
    mesh = modeops.RadialMesh.log_mapped(prof.r0, prof.ell, xi_lo, np.log(2.0), n)
    r = mesh.r
    eta_nodes = packet.chart.eta(r)
    inside = (eta_nodes >= lo) & (eta_nodes <= hi)
    om = np.zeros(n, dtype=complex)
    if np.any(inside):
        sl = packet.slice(t, eta=eta_nodes[inside], weights=np.zeros(inside.sum()))
        om[inside] = -sl.bz
    chi = modeops.inv_neg_laplacian(mesh, lam, om)
    # ||grad_perp chi||^2 = <chi, -Lap chi> = <chi, omega>
    grad_chi = np.sqrt(max(modeops.inner(mesh, chi, om), 0.0))
    uz_l2 = nrm(u)
    grad_uz = lp_norm_of([-s.dpsi_r, -s.dpsi_th], W, m, 2)
    return hp, HallReport(float(t), resid, nrm(errh_u), nrm(nu * s.lap_psi), uz_l2, grad_uz,
                          nrm(s.bz), uz_l2 + grad_chi, s.l2(), packet.g0_norm(1))
