"""The acceptance battery.  Each check returns a Check with pass/fail and the
measured constants; tolerances are the ones stated for each criterion."""

import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import bichar, bogovskii as bg, cylgrid as cg, linsolver as ls, wavepacket as wp
from .background import (EmhdBackground, burgers_point, finite_speed_check, hall_small_time,
                         lemma_window_defect, make_profile, evolve_burgers)
from .util import cutoff, bump

# frozen constants (measured once, see the decisions ledger)
C_DIVCURL = 1.0          # sup |div curl U| <= C (dr^2 + dz^2) ||U||_C3
C_HARDY = 2.0            # Hardy margin >= -C dr (relative to ||u||^2)
C_BOGOVSKII_GRAD = 10.0  # ||grad h|| <= C ||g||
K_PAIRING = 1.0          # |d/dt pairing| <= K ell^-3/2 ||b|| ||g0||
C_APRIORI = 1.0          # E(t) <= E(0) exp(C t ||Q'||_inf)

ELL, R0 = 0.5, 1.5


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name} ({self.seconds:.1f}s): {vals}"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        chk = fn(*a, **kw)
        chk.seconds = time.perf_counter() - t0
        return chk
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def profile():
    return make_profile(ELL, R0)


# ------------------------------------------------------------------- 1

def random_axi_field(grid, rng):
    """Smooth axisymmetric field with the correct axis parities; returns (U, C3 scale)."""
    R, Z = grid.mesh()
    comps, c3 = [], 0.0
    for _ in range(3):
        A, w = rng.normal(), rng.uniform(0.6, 1.0)
        zc, a = rng.uniform(-1, 1), 0.3 * rng.normal()
        comps.append(A * np.exp(-(R**2 + (Z - zc) ** 2) / w**2) * (1 + a * R**2))
        c3 = max(c3, abs(A) * (1 + abs(a)) / w**3)
    return cg.AxiVectorField(grid, R * comps[0], comps[1], comps[2]), c3


def random_hardy_u(grid, rng):
    """Compactly supported smooth even function of r."""
    u = np.zeros(grid.n_r)
    for _ in range(rng.integers(1, 4)):
        c, w = rng.uniform(0.2, 0.7) * grid.r_max, rng.uniform(0.05, 0.25) * grid.r_max
        u += rng.normal() * bump((grid.r - c) / w)
    return u


@_timed
def check_vector_calculus(n_fields=50, seed=1):
    rng = np.random.default_rng(seed)
    grid = cg.RZGrid(4.0, 64, 4.0, 128)
    ratios = []
    for _ in range(n_fields):
        U, c3 = random_axi_field(grid, rng)
        d = cg.div_axi(cg.curl_axi(U)).values
        ratios.append(np.abs(d).max() / ((grid.dr**2 + grid.dz**2) * c3))
    rg = cg.RGrid(4.0, 400)
    margins = []
    for k in range(n_fields):
        u = random_hardy_u(rg, rng)
        ell = int(rng.integers(1, 6))
        gap, nrm = cg.hardy_gap(u, rg, ell)
        margins.append(gap / nrm / rg.dr)
    C_fit = max(ratios)
    worst = min(margins)
    ok = C_fit <= C_DIVCURL and worst >= -C_HARDY
    return Check(1, "vector calculus: div curl = O(dr^2), Hardy", ok,
                 dict(C_divcurl=C_fit, hardy_margin_over_dr=worst))


# ------------------------------------------------------------------- 2

@_timed
def check_burgers():
    patch = lambda r, z: z * cutoff(z, 1.0)
    errs = []
    for t in (0.05, 0.1, 0.2):
        z = np.linspace(-0.5, 0.5, 101) * (1 - 2 * t)
        P = burgers_point(patch, np.ones_like(z), z, t, sup=1.2)
        errs.append(np.abs(P - z / (1 - 2 * t)).max())
    prof = profile()
    grid = cg.RZGrid(prof.r0 + 3 * prof.ell, 48, 24 * prof.ell, 193)
    defects = [lemma_window_defect(prof, grid, t) for t in np.linspace(0, 4 * prof.ell, 9)[1:]]
    # finite speed: data that differ only far away agree; differing inside the cone disagree
    base = lambda r, z: 0.2 * np.exp(-r**2) * cutoff(z, 1.0)
    far = lambda r, z: base(r, z) + 0.1 * np.exp(-r**2) * bump(z - 8.0)
    near = lambda r, z: base(r, z) + 0.1 * np.exp(-r**2) * bump(4 * z)
    g2 = cg.RZGrid(2.0, 16, 4.0, 33)
    same = finite_speed_check(base, far, 0.5, g2)
    # data differing inside the cone give different solutions there
    R, Z = g2.mesh()
    differ = bool(np.abs(burgers_point(base, R, Z, 0.5, 0.5) - burgers_point(near, R, Z, 0.5, 0.5)).max() > 0)
    ok = max(errs) <= 1e-8 and max(defects) == 0.0 and same and differ
    return Check(2, "Burgers exactness, window lemma, finite speed", ok,
                 dict(patch_err=max(errs), window_defect=max(defects), cone_same=same, cone_differ=differ))


# ------------------------------------------------------------------- 3

@_timed
def check_hall_small_time():
    out = hall_small_time(profile())
    lt = np.log(out["t"])
    s1 = np.polyfit(lt, np.log(out["gradV"]), 1)[0]
    s2 = np.polyfit(lt, np.log(out["dPi"]), 1)[0]
    ok = abs(s1 - 1.0) <= 0.15 and abs(s2 - 2.0) <= 0.3
    return Check(3, "Hall small-time scalings", ok, dict(slope_gradV=s1, slope_dPi=s2))


# ------------------------------------------------------------------- 4

@lru_cache(maxsize=None)
def _packet(lam, r0=R0, ell=ELL):
    return wp.WavePacket(make_profile(ell, r0), lam)


@_timed
def check_phase_envelope():
    pk = _packet(32)
    ch = pk.chart
    eta = np.linspace(-12, -0.01, 2000)
    hj = float(np.max(np.abs(wp.hj_residual(ch, eta, 0.7))))
    sup_ok, worst = True, -np.inf
    for tau in np.linspace(0, 10, 41):
        lo, hi = pk.support(tau)
        # h vanishes at the endpoints of its closed support
        sup_ok &= lo >= -1 - tau - 1e-12 and hi <= -tau / 2 + 1e-12
        worst = max(worst, lo - (-1 - tau), hi - (-tau / 2))
    sl = wp.solve_envelope(pk.h0, ch, 10.0)
    l2 = max(sl.l2(k) for k in range(len(sl.taus))) / pk.h0.l2()
    ok = hj <= 1e-6 and sup_ok and l2 <= 1.5
    return Check(4, "phase and envelope", ok, dict(hj_residual=hj, support_ok=sup_ok, sup_l2_ratio=l2))


# ------------------------------------------------------------------- 5

@_timed
def check_degeneration():
    lams = (32, 64, 128)
    slopes = {}
    for lam in lams:
        pk = _packet(lam)
        ts = np.linspace(1.0, 4.0, 6) / lam
        for p in (1.0, 4.0 / 3.0, 2.0):
            slopes[(lam, p)] = wp.degeneration_rate(pk, p, ts).slope
    neg = all(slopes[(l, p)] < 0 for l in lams for p in (1.0, 4.0 / 3.0))
    lam_ratios = [slopes[(2 * l, p)] / slopes[(l, p)] for l in (32, 64) for p in (1.0, 4.0 / 3.0)]
    p_ratios = [slopes[(l, 1.0)] / slopes[(l, 4.0 / 3.0)] for l in lams]
    expect_p = (1.0 - 0.5) / (0.75 - 0.5)
    p2 = max(abs(slopes[(l, 2.0)]) / l for l in lams)
    ok = (neg and all(abs(r / 2 - 1) <= 0.15 for r in lam_ratios)
          and all(abs(r / expect_p - 1) <= 0.2 for r in p_ratios) and p2 <= 0.05)
    return Check(5, "degeneration scaling", ok,
                 dict(lam_ratios=lam_ratios, p_ratios=p_ratios, p2_slope_over_lam=p2,
                      kappa_p1=[-slopes[(l, 1.0)] / (0.5 * l) for l in lams]))


# ------------------------------------------------------------------- 6

@_timed
def check_error_bounded(lam=64):
    pk = _packet(lam, r0=20 * ELL)
    g0h2 = pk.g0_norm(2)
    ts = np.linspace(0, 2 * np.log(lam) / lam, 9)
    reps = [wp.packet_error(pk, t, g0h2) for t in ts]
    ratios = np.array([r.ratio for r in reps])
    h1 = np.array([r.h1 for r in reps])
    variation = ratios.max() / ratios.min()
    growth = h1[-1] / h1[0]
    ok = variation <= 3 and growth >= np.e
    return Check(6, "packet error bounded while H1 grows", ok,
                 dict(err_variation=variation, h1_growth=growth, r0_over_ell=20))


# ------------------------------------------------------------------- 7

@_timed
def check_bogovskii(n=24, n_sources=30, seed=7):
    U = bg.BogovskiiDomain(L=1.0)
    rng = np.random.default_rng(seed)
    basis = bg.BumpGradientBasis.draw(U, rng)
    pts, dx = bg.grid3(U, n)
    quad = bg.QuadratureSpec(n_mu=8, n_phi=16, n_rho=8, n_u=24)
    Hb = np.swapaxes(bg.div_inverse(basis, U, pts, quad), -1, -2)   # (n, n, n, 3, K)
    Gb = basis(pts)                                       # (n, n, n, K)
    inside = U.contains(pts)
    support_exact = bool(np.all(Hb[~inside] == 0))
    resid, bound, grad_ratio = [], [], []
    for _ in range(n_sources):
        a = rng.normal(size=basis.size)
        h = Hb @ a
        g = Gb @ a
        d = bg.fd_div(h, dx) - g
        src = bg.RandomDivSource(basis.centers, basis.radii, a.reshape(-1, 3))
        resid.append(np.sqrt(np.mean(d**2)))
        bound.append(10 * dx**2 * src.c1_norm(pts))
        grad_ratio.append(bg.fd_grad_l2(h, dx) / np.sqrt(np.sum(g**2) * dx**3))
    res_ok = all(r <= b for r, b in zip(resid, bound))
    C = max(grad_ratio)
    ok = res_ok and support_exact and C <= C_BOGOVSKII_GRAD
    return Check(7, "Bogovskii right inverse", ok,
                 dict(max_resid_over_bound=max(r / b for r, b in zip(resid, bound)),
                      support_exact=support_exact, grad_constant=C))


# ------------------------------------------------------------------- 8, 9, 11

@lru_cache(maxsize=None)
def _linear_run(lam, system="emhd", tau_max=4.0):
    pk = _packet(lam)
    tmax = tau_max / lam if system == "emhd" else np.log(lam) / lam
    return ls.run_linear(pk, tmax, system=system, n_out=24)


@_timed
def check_pairing():
    Ks = {}
    for lam in (32, 64, 128):
        Ks[lam] = _linear_run(lam).trace.budget_constant()
    T, thr = _linear_run(64).trace.lower_bound_window()
    ok = T > 0 and max(Ks.values()) <= K_PAIRING
    return Check(8, "pairing lower bound and lam-independent budget", ok,
                 dict(window_T=T, window_lam_t=64 * T, K=[Ks[l] for l in (32, 64, 128)], K_frozen=K_PAIRING))


@_timed
def check_growth():
    r32, r64 = _linear_run(32), _linear_run(64)
    c32, c64 = ls.growth_certificate(r32, 1, 2), ls.growth_certificate(r64, 1, 2)
    ratio = c64.rate / c32.rate
    flat = max(abs(ls.growth_certificate(r, 0, 2).rate) / r.trace.lam for r in (r32, r64))
    h32, h64 = _linear_run(32, "hall"), _linear_run(64, "hall")
    hall_cert = []
    for h in (h32, h64):
        c = ls.growth_certificate(h, 1, 2)
        hall_cert.append(c.positive and c.holds and c.rate > 0)
    u_ratio = h64.trace.u_ratio() / h32.trace.u_ratio()
    ok = (abs(ratio / 2 - 1) <= 0.2 and flat <= 0.05 and c32.holds and c64.holds
          and all(hall_cert) and abs(u_ratio / 0.5 - 1) <= 0.3)
    return Check(9, "growth certificate", ok,
                 dict(W12_rate_over_lam=[c32.rate / 32, c64.rate / 64], rate_ratio=ratio,
                      L2_rate_over_lam=flat, hall_certified=hall_cert, u_smoothing_ratio=u_ratio))


@_timed
def check_energy_audit():
    e = _linear_run(64).audit
    h = _linear_run(32, "hall")
    tr = h.trace
    E = np.asarray(tr.energy)
    t = np.asarray(tr.t)
    Qn = np.max(np.abs(h.setup.Qp))
    growth_ok = bool(np.all(E <= E[0] * np.exp(C_APRIORI * t * Qn) * (1 + 1e-12)))
    ok = e["rel_mismatch"] <= 1e-4 and growth_ok and h.audit["rel_mismatch"] <= 1e-4
    return Check(11, "energy identity audits", ok,
                 dict(emhd_step_mismatch=e["rel_mismatch"], hall_step_mismatch=h.audit["rel_mismatch"],
                      hall_C_fit=h.audit["apriori_C"], hall_growth_ok=growth_ok))


# ------------------------------------------------------------------- 10

@_timed
def check_bichar():
    lams = (16, 32, 64)
    slopes, drift, integ, ybound = [], [], [], []
    for lam in lams:
        tr = bichar.shear_ray(lam, z0=0.3, xiz0=0.5)
        s = tr.xi_slope((1.0 / lam, 4.0 / lam))
        slopes.append(s / lam)
        drift.append(tr.h_drift())
        integ.append(tr.integral_drift())
        ybound.append(float(np.max(tr.X[:, 1] * np.exp(s * tr.t))))
    ok = (max(drift) <= 1e-8 and max(integ) <= 1e-8 and all(abs(s - 1) <= 0.1 for s in slopes)
          and max(ybound) < 10)
    return Check(10, "bicharacteristics", ok,
                 dict(slope_over_lam=slopes, H_drift=max(drift), Xix_drift=max(integ), max_y_e_st=max(ybound)))


CHECKS = {1: check_vector_calculus, 2: check_burgers, 3: check_hall_small_time, 4: check_phase_envelope,
          5: check_degeneration, 6: check_error_bounded, 7: check_bogovskii, 8: check_pairing,
          9: check_growth, 10: check_bichar, 11: check_energy_audit}


def run_check(k):
    try:
        return CHECKS[k]()
    except Exception as exc:          # a crash is a failed criterion, not a crashed battery
        return Check(k, CHECKS[k].__name__, False, dict(error=f"{type(exc).__name__}: {exc}"))


def run_all(numbers=None):
    return [run_check(k) for k in (numbers or sorted(CHECKS))]
