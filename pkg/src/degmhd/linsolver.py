"""Linearized E-MHD / Hall-MHD around f(r) d_theta for one angular mode lam.

E-MHD pair (b^z, psi), with b^r = r^-1 d_theta psi, b^theta = -d_r psi:

    d_t b^z = i lam f Lap psi - i lam q psi,     d_t psi = -i lam f b^z

Hall quadruple (u^z, omega, b^z, psi):

    d_t u^z   = i lam f b^z + nu Lap u^z
    d_t omega = i lam q psi - i lam f Lap psi + nu Lap omega
    d_t b^z   = i lam f u^z - i lam q psi + i lam f Lap psi
    d_t psi   = i lam f (-Lap)^-1 omega - i lam f b^z

q = f'' + 3 f'/r.  The radial mesh is r = r0 + l e^xi with uniform xi (the
packet's radial wavenumber grows like e^{lam t} but is constant in xi), with
Dirichlet walls at both ends.  Lap is the flux-form operator of modeops, so
the f-terms cancel exactly in the discrete energy and
d/dt (1/2)||b||^2 = -Re<i lam q psi, b^z> holds for the semi-discrete system.
"""

from dataclasses import dataclass, field

import numpy as np

from scipy.linalg import solve_banded

from . import modeops
from .background import DivergenceError, StepError
from .cylgrid import lp_norm_of
from .util import fit_slope


# -------------------------------------------------------------- mesh/setup

@dataclass
class ModeSetup:
    """Mesh, profile coefficients and cached operator bands for mode lam."""
    prof: object
    lam: int
    mesh: modeops.RadialMesh
    f: np.ndarray = field(init=False)
    q: np.ndarray = field(init=False)
    Qp: np.ndarray = field(init=False)

    def __post_init__(self):
        r = self.mesh.r
        self._r = r
        self.V = self.mesh.volumes
        self._ab = {}
        self.f = self.prof.f(r)
        self.q = self.prof.q(r)
        # Q' = d_r (r^-1 d_r (r^2 f)) = 3 f' + r f'', evaluated independently of q
        self.Qp = 3 * self.prof.df(r) + r * self.prof.d2f(r)
        self.bands = modeops.laplacian_bands(self.mesh, self.lam)

    @property
    def r(self):
        return self._r

    def lap(self, a):
        sub, main, sup = self.bands
        out = main * a
        out[1:] += sub * a[:-1]
        out[:-1] += sup * a[1:]
        return out

    def inv_neg_lap(self, a, shift=0.0):
        """Solve (shift - Lap) x = a (cached tridiagonal bands)."""
        ab = self._ab.get(shift)
        if ab is None:
            sub, main, sup = self.bands
            ab = np.zeros((3, len(main)))
            ab[0, 1:] = -sup
            ab[1] = shift - main
            ab[2, :-1] = -sub
            self._ab[shift] = ab
        x = solve_banded((1, 1), ab, a, check_finite=False)
        if not np.all(np.isfinite(x)):
            raise np.linalg.LinAlgError("singular tridiagonal solve")
        return x

    def ip(self, a, b):
        return float(np.pi * np.sum(self.V * np.real(a * np.conj(b))))

    def spectral_radius(self):
        """Bound on |eigenvalues| of the E-MHD generator (Gershgorin on f^2 (-Lap))."""
        sub, main, sup = self.bands
        row = np.abs(main)
        row[1:] += np.abs(sub)
        row[:-1] += np.abs(sup)
        return float(self.lam * np.max(self.f * np.sqrt(row)) + self.lam * np.max(np.abs(self.q)))

    def stable_dt(self, safety=0.9):
        rho = self.spectral_radius()
        return np.inf if rho == 0 else safety * 2.8 / rho


def default_ppw(lam, tau_max):
    """Points per wavelength in xi.  Grid phase error grows like lam tau (k dxi)^2,
    so the resolution has to grow like sqrt(lam tau) to keep it bounded."""
    return int(max(40, np.ceil(4.0 * np.sqrt(lam * max(tau_max, 1.0)))))


def make_setup(prof, lam, tau_max, ppw=None, xi_pad=1.5, xi_hi=None, n=None):
    """Log mesh from xi_lo = -(tau_max + 1 + xi_pad) to xi_hi = ln 2 (r = r0 + 2 l).

    The packet lives in eta in [-1 - tau, 0] and moves inward, so the walls
    are never reached; boundary_energy_fraction monitors this.
    """
    xi_lo = -(tau_max + 1.0 + xi_pad)
    xi_hi = np.log(2.0) if xi_hi is None else xi_hi
    ppw = default_ppw(lam, tau_max) if ppw is None else ppw
    if n is None:
        dxi = 2 * np.pi / (ppw * lam)
        n = int(np.ceil((xi_hi - xi_lo) / dxi)) + 1
    mesh = modeops.RadialMesh.log_mapped(prof.r0, prof.ell, xi_lo, xi_hi, n)
    return ModeSetup(prof, lam, mesh)


# ---------------------------------------------------------------- states

@dataclass
class LinStateE:
    lam: int
    bz: np.ndarray
    psi: np.ndarray
    t: float = 0.0


@dataclass
class LinStateH:
    lam: int
    uz: np.ndarray
    omega: np.ndarray
    bz: np.ndarray
    psi: np.ndarray
    nu: float = 0.0
    t: float = 0.0


def components(setup, psi, bz):
    """Physical (b^r, b^theta, b^z) on the mesh; b^theta by centred differences."""
    return [1j * setup.lam * psi / setup.r, -modeops.d_r(setup.mesh, psi), bz]


def discrete_div(setup, psi):
    """r^-1 d_r(r b^r) + r^-1 d_theta b^theta with b from psi: zero by construction.

    In the mode representation b^r = i lam psi / r and b^theta = -d_r psi, and
    the divergence r^-1 d_r(i lam psi) - (i lam / r) d_r psi uses the same
    difference operator twice, so it cancels identically.
    """
    D = lambda a: modeops.d_r(setup.mesh, a)
    lam, r = setup.lam, setup.r
    return D(r * (1j * lam * psi / r)) / r + 1j * lam * (-D(psi)) / r


# ------------------------------------------------------------- E-MHD step

def rhs_emhd(setup, bz, psi):
    il = 1j * setup.lam
    return il * setup.f * setup.lap(psi) - il * setup.q * psi, -il * setup.f * bz


def _check(arrs, t):
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise DivergenceError(t)


def step_emhd(setup, state, dt):
    if dt > setup.stable_dt():
        raise StepError(f"dt = {dt:.3e} exceeds the stability bound {setup.stable_dt():.3e}")
    b, p = state.bz, state.psi
    k1 = rhs_emhd(setup, b, p)
    k2 = rhs_emhd(setup, b + 0.5 * dt * k1[0], p + 0.5 * dt * k1[1])
    k3 = rhs_emhd(setup, b + 0.5 * dt * k2[0], p + 0.5 * dt * k2[1])
    k4 = rhs_emhd(setup, b + dt * k3[0], p + dt * k3[1])
    b = b + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    p = p + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    _check((b, p), state.t + dt)
    return LinStateE(state.lam, b, p, state.t + dt)


def energy_emhd(setup, state):
    """(1/2)(||b^z||^2 + <psi, -Lap psi>) in the discrete inner product."""
    return 0.5 * (setup.ip(state.bz, state.bz) + setup.ip(state.psi, -setup.lap(state.psi)))


def energy_rhs(setup, psi, bz):
    """-int b^z b^r Q' r dr dtheta by quadrature of the physical components."""
    br = 1j * setup.lam * psi / setup.r
    return -float(np.pi * np.sum(setup.V * np.real(bz * np.conj(br)) * setup.Qp))


# -------------------------------------------------------------- Hall step

def rhs_hall(setup, uz, om, bz, psi, nu):
    il = 1j * setup.lam
    f, q = setup.f, setup.q
    lap_psi = setup.lap(psi)
    qpsi = q * psi
    chi = setup.inv_neg_lap(om)
    du = il * f * bz
    dom = il * qpsi - il * f * lap_psi
    if nu:
        du = du + nu * setup.lap(uz)
        dom = dom + nu * setup.lap(om)
    db = il * f * uz - il * qpsi + il * f * lap_psi
    dp = il * f * chi - il * f * bz
    return du, dom, db, dp


def step_hall(setup, state, dt):
    if dt > setup.stable_dt():
        raise StepError(f"dt = {dt:.3e} exceeds the stability bound {setup.stable_dt():.3e}")
    if state.nu * dt > 0.25 * np.min(np.diff(setup.r)) ** 2:
        raise StepError("viscous step restriction nu dt <= dr^2/4 violated")
    y = (state.uz, state.omega, state.bz, state.psi)
    nu = state.nu
    k1 = rhs_hall(setup, *y, nu)
    k2 = rhs_hall(setup, *[a + 0.5 * dt * k for a, k in zip(y, k1)], nu)
    k3 = rhs_hall(setup, *[a + 0.5 * dt * k for a, k in zip(y, k2)], nu)
    k4 = rhs_hall(setup, *[a + dt * k for a, k in zip(y, k3)], nu)
    new = [a + dt / 6 * (p + 2 * q + 2 * s + w) for a, p, q, s, w in zip(y, k1, k2, k3, k4)]
    _check(new, state.t + dt)
    return LinStateH(state.lam, *new, nu=nu, t=state.t + dt)


def energy_hall(setup, state):
    """(1/2)(||u||^2 + ||b||^2) with ||u_perp||^2 = <omega, (-Lap)^-1 omega>."""
    chi = setup.inv_neg_lap(state.omega)
    return 0.5 * (setup.ip(state.uz, state.uz) + setup.ip(state.omega, chi)
                  + setup.ip(state.bz, state.bz) + setup.ip(state.psi, -setup.lap(state.psi)))


def u_norm(setup, state):
    chi = setup.inv_neg_lap(state.omega)
    return float(np.sqrt(setup.ip(state.uz, state.uz) + setup.ip(state.omega, chi)))


# ------------------------------------------------------------------ norms

def hs_norm(setup, psi, bz, s):
    """||b||_{H^s} for integer s >= 0 from the scalar pair, via (1 - Lap)^s."""
    if s < 0 or int(s) != s:
        raise ValueError("hs_norm needs an integer s >= 0")
    a, p = bz, psi
    for _ in range(int(s)):
        a = a - setup.lap(a)
        p = p - setup.lap(p)
    return float(np.sqrt(max(setup.ip(bz, a) + setup.ip(psi, -setup.lap(p)), 0.0)))


def hs_dual_norm(setup, psi, bz, s):
    """||b||_{H^-s} via tridiagonal solves with (1 - Lap)."""
    a, p = bz, psi
    for _ in range(int(s)):
        a = setup.inv_neg_lap(a, shift=1.0)
        p = setup.inv_neg_lap(p, shift=1.0)
    return float(np.sqrt(max(setup.ip(bz, a) + setup.ip(psi, -setup.lap(p)), 0.0)))


def pairing_xy(setup, psi, bz, psi_t, bz_t):
    """<b, b~>_{xy} = <b^z, b~^z> + <psi, -Lap psi~>."""
    return setup.ip(bz, bz_t) + setup.ip(psi, -setup.lap(psi_t))


def boundary_energy_fraction(setup, psi, bz, frac=0.03):
    """Share of the energy density in the first/last frac of the mesh (wall monitor)."""
    n = setup.mesh.n
    k = max(2, int(frac * n))
    V = setup.V
    dens = V * (np.abs(bz) ** 2 + np.abs(modeops.d_r(setup.mesh, psi)) ** 2
                + setup.lam**2 * np.abs(psi / setup.r) ** 2)
    tot = dens.sum()
    if tot == 0:
        return 0.0, 0.0
    return float(dens[:k].sum() / tot), float(dens[-k:].sum() / tot)


# ------------------------------------------------------- packet sampling

def packet_on_mesh(packet, setup, t):
    """Packet amplitudes (psi~, b~z, err b~z) sampled at the mesh nodes."""
    n = setup.mesh.n
    eta = packet.chart.eta(setup.r)
    lo, hi = packet.support(packet.lam * packet.mu * t)
    inside = (eta >= lo) & (eta <= hi)
    psi = np.zeros(n, dtype=complex)
    bz = np.zeros(n, dtype=complex)
    err = np.zeros(n, dtype=complex)
    if np.any(inside):
        s = packet.slice(t, eta=eta[inside], weights=np.zeros(inside.sum()))
        psi[inside], bz[inside], err[inside] = s.psi, s.bz, s.err_bz
    return psi, bz, err


# ----------------------------------------------------------------- traces

@dataclass
class PairingTrace:
    lam: int
    system: str
    t: list = field(default_factory=list)
    pairing: list = field(default_factory=list)      # <b, chi b~> (3D, via ||chi||^2)
    b_l2: list = field(default_factory=list)          # ||b|| (3D, via ||chi||)
    bt_l2: list = field(default_factory=list)
    err_l2: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    hs: dict = field(default_factory=dict)            # s -> list of ||b||_{H^s}
    dual: dict = field(default_factory=dict)          # (s, p) -> list of certified lower bounds
    direct: dict = field(default_factory=dict)        # (s, p) -> list of measured ||b||_{W^{s,p}}
    u_l2: list = field(default_factory=list)
    u_pairing: list = field(default_factory=list)
    wall: list = field(default_factory=list)
    chi_l2: float = 1.0
    g0_l2: float = 1.0
    ell: float = 1.0

    def arrays(self):
        return {k: np.asarray(v) for k, v in self.__dict__.items() if isinstance(v, list)}

    def budget(self):
        """ell^-3/2 ||b|| ||g0|| with ell^1/2 := ||chi||_{L^2_z}."""
        return np.asarray(self.b_l2) * self.g0_l2 / self.chi_l2**3

    def budget_constant(self):
        """max |d/dt pairing| / budget over the trace (K in the generalized energy bound)."""
        t = np.asarray(self.t)
        P = np.asarray(self.pairing)
        dP = np.gradient(P, t)
        return float(np.max(np.abs(dP) / self.budget()))

    def u_ratio(self, tau_min=1.0):
        """Mean of ||u|| / ||b|| over samples with lam t >= tau_min (past the initial transient)."""
        t = np.asarray(self.t)
        r = np.asarray(self.u_l2) * self.chi_l2 / np.asarray(self.b_l2)
        m = self.lam * t >= tau_min
        return float(np.mean(r[m]))

    def lower_bound_window(self):
        """Largest T with pairing >= (1/2) ||chi|| ||b0|| ||g0|| on [0, T]."""
        P = np.asarray(self.pairing)
        thr = 0.5 * self.chi_l2 * self.b_l2[0] * self.g0_l2
        bad = np.nonzero(P < thr)[0]
        k = bad[0] if bad.size else len(P)
        return (float(self.t[k - 1]) if k > 0 else -np.inf), thr


def _dual_lower_bound(setup, psi, bz, psi_t, bz_t, s, p):
    """Certified lower bound for ||b||_{W^{s,p}} by discrete duality with b~."""
    if p == 2:
        pair = pairing_xy(setup, psi, bz, psi_t, bz_t)
        return pair / hs_dual_norm(setup, psi_t, bz_t, s)
    if s != 0:
        raise NotImplementedError("duality certificates for s >= 1 need p = 2")
    cb = components(setup, psi, bz)
    ct = components(setup, psi_t, bz_t)
    pair = float(np.pi * sum(np.sum(setup.V * np.real(a * np.conj(b))) for a, b in zip(cb, ct)))
    pp = np.inf if p == 1 else (1.0 if np.isinf(p) else p / (p - 1))
    return pair / lp_norm_of(ct, setup.V, setup.lam, pp)


def direct_norm(setup, psi, bz, s, p):
    """||b||_{W^{s,p}} measured on the mesh with the same discrete conventions."""
    if p == 2:
        return hs_norm(setup, psi, bz, s)
    if s != 0:
        raise NotImplementedError("direct W^{s,p} norms for s >= 1 need p = 2")
    return lp_norm_of(components(setup, psi, bz), setup.V, setup.lam, p)


@dataclass
class RunResult:
    trace: PairingTrace
    setup: ModeSetup
    final: object
    audit: dict


def run_linear(packet, tmax, system="emhd", nu=0.0, n_out=40, chi_l2=None, cert=((1, 2), (0, 2), (0, np.inf)),
               hs_orders=(0, 1), dt=None, ppw=None, setup=None, audit_steps=200):
    """Packet-seeded run of the 2.5-d linearized system with pairing and certificate tracking.

    The 3D data is modelled as chi(z) times the 2.5-d solution, so 3D pairings
    and norms carry ||chi||^2 and ||chi|| (analytic z-integration).
    """
    lam = packet.lam
    tau_max = lam * packet.mu * tmax
    setup = setup or make_setup(packet.prof, lam, tau_max, ppw=ppw)
    if dt is None:
        dt = min(0.5 * setup.stable_dt(), 0.1 / lam**2)
        if system == "hall" and nu > 0:
            # explicit viscosity on the finest log-mesh cell
            dt = min(dt, 0.9 * 0.25 * np.min(np.diff(setup.r)) ** 2 / nu)
    n_steps = max(1, int(np.ceil(tmax / dt)))
    dt = tmax / n_steps
    out_every = max(1, n_steps // n_out)
    chi_l2 = 1.0 if chi_l2 is None else chi_l2

    psi0, bz0, _ = packet_on_mesh(packet, setup, 0.0)
    if system == "emhd":
        state = LinStateE(lam, bz0.copy(), psi0.copy())
        step, energy = step_emhd, energy_emhd
    elif system == "hall":
        z = np.zeros_like(bz0)
        state = LinStateH(lam, z, z.copy(), bz0.copy(), psi0.copy(), nu=nu)
        step, energy = step_hall, energy_hall
    else:
        raise ValueError(f"unknown system {system!r}")

    tr = PairingTrace(lam, system, chi_l2=chi_l2, g0_l2=packet.g0_norm(0), ell=packet.prof.ell)
    for s in hs_orders:
        tr.hs[s] = []
    for sp in cert:
        tr.dual[sp] = []
        tr.direct[sp] = []

    def record(st):
        psi_t, bz_t, err_t = packet_on_mesh(packet, setup, st.t)
        tr.t.append(st.t)
        tr.pairing.append(chi_l2**2 * pairing_xy(setup, st.psi, st.bz, psi_t, bz_t))
        tr.b_l2.append(chi_l2 * hs_norm(setup, st.psi, st.bz, 0))
        tr.bt_l2.append(chi_l2 * hs_norm(setup, psi_t, bz_t, 0))
        tr.err_l2.append(chi_l2 * np.sqrt(setup.ip(err_t, err_t)))
        tr.energy.append(energy(setup, st))
        for s in hs_orders:
            tr.hs[s].append(hs_norm(setup, st.psi, st.bz, s))
        for (s, p) in cert:
            tr.dual[(s, p)].append(_dual_lower_bound(setup, st.psi, st.bz, psi_t, bz_t, s, p))
            tr.direct[(s, p)].append(direct_norm(setup, st.psi, st.bz, s, p))
        tr.wall.append(max(boundary_energy_fraction(setup, st.psi, st.bz)))
        if system == "hall":
            tr.u_l2.append(u_norm(setup, st))
            # Hall companion u~ = (-grad_perp psi~ ..., -psi~): <u, u~> = <u^z, -psi~> + <omega, (-Lap)^-1 (-b~z)>
            tr.u_pairing.append(chi_l2**2 * (setup.ip(st.uz, -psi_t)
                                              + setup.ip(st.omega, setup.inv_neg_lap(-bz_t))))

    # energy audit on the first audit_steps steps: Simpson over step pairs
    E, R = [], []
    record(state)
    for k in range(n_steps):
        if k <= audit_steps:
            E.append(energy(setup, state))
            R.append(energy_rhs(setup, state.psi, state.bz) if system == "emhd"
                     else _hall_energy_rhs(setup, state))
        state = step(setup, state, dt)
        if (k + 1) % out_every == 0 or k + 1 == n_steps:
            record(state)
    E, R = np.array(E), np.array(R)
    audit = {}
    if len(E) >= 3:
        dE = (E[2:] - E[:-2])
        simpson = dt / 3 * (R[:-2] + 4 * R[1:-1] + R[2:])
        scale = np.max(np.abs(simpson)) if np.max(np.abs(simpson)) > 0 else 1.0
        # per-step mismatch relative to the energy (the tolerance is per step)
        per_step = 0.5 * np.abs(dE - simpson) / E[1:-1]
        audit = dict(rel_mismatch=float(np.max(per_step)),
                     rate_mismatch=float(np.max(np.abs(dE - simpson)) / scale),
                     dt=dt, n_steps=n_steps,
                     apriori_C=float(np.max(np.abs(R) / (E * np.max(np.abs(setup.Qp))))))
    return RunResult(tr, setup, state, audit)


def _hall_energy_rhs(setup, state):
    """Discrete d/dt of energy_hall from the q-coupling and viscosity (quadrature form)."""
    lam = setup.lam
    chi = setup.inv_neg_lap(state.omega)
    br = 1j * lam * state.psi / setup.r
    ur = 1j * lam * chi / setup.r
    V = setup.V
    val = -np.pi * np.sum(V * np.real(state.bz * np.conj(br)) * setup.Qp)
    val += np.pi * np.sum(V * np.real(chi * np.conj(1j * lam * setup.q * state.psi)))
    if state.nu:
        val += state.nu * (setup.ip(state.uz, setup.lap(state.uz)) + setup.ip(chi, setup.lap(state.omega)))
    return float(val)


# ----------------------------------------------------------- certificates

@dataclass
class GrowthCertificate:
    s: int
    p: float
    lam: int
    rate: float
    t: np.ndarray
    lower: np.ndarray
    direct: np.ndarray
    holds: bool            # direct >= lower at every sample
    positive: bool         # lower bound stays > 0 in the window


def growth_certificate(result, s, p, t_window=None):
    tr = result.trace
    t = np.asarray(tr.t)
    L = np.asarray(tr.dual[(s, p)])
    mask = np.ones_like(t, bool) if t_window is None else (t >= t_window[0]) & (t <= t_window[1])
    positive = bool(np.all(L[mask] > 0))
    rate = fit_slope(t[mask], np.log(np.abs(L[mask])))[0] if mask.sum() >= 2 else np.nan
    direct = np.asarray(tr.direct[(s, p)])
    holds = bool(np.all(direct[mask] >= L[mask] * (1 - 1e-12)))
    return GrowthCertificate(s, p, tr.lam, rate, t[mask], L[mask], direct[mask], holds, positive)


def bruteforce_dr_bound(packet, t):
    """||d_r b~(t)||_{L^2_xy} from the assembled packet."""
    s = packet.slice(t)
    comps = s._b_family()[1]
    return lp_norm_of(comps, s.weights, s.lam, 2)


def dr_bound_fit(packet, t_samples):
    vals = np.array([bruteforce_dr_bound(packet, t) for t in t_samples])
    slope, icpt = fit_slope(np.asarray(t_samples), np.log(vals))
    return slope, vals
