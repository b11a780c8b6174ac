"""Bogovskii right inverse of the divergence on axis-centred cylinders.

U = {|(x, y)| < L, |z - zc| < L}, x0 = (0, 0, zc), i(U) = c L with c = 1/4, and
w_U the rescaled standard bump.  For y = x + u w (|w| = 1) the kernel becomes

    h(x) = -int_{S^2} w int_0^inf int_0^inf w_U(x - rho w) (rho + u)^2 g(x + u w) drho du dw

which splits into chord moments A_k = int rho^k w_U(x - rho w) drho and
M_k = int u^k g(x + u w) du:  (rho + u)^2 -> A0 M2 + 2 A1 M1 + A2 M0.  Both
chords are intervals known in closed form (ball and convex cylinder), so every
integral is a Gauss-Legendre sum of a smooth integrand.  For x outside U the
operator vanishes identically (convexity), which is applied exactly.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import roots_legendre

from .util import cutoff, cutoff_deriv


class DomainError(ValueError):
    pass


@lru_cache(maxsize=None)
def _bump_mass():
    """int_{|x|<1} exp(-1/(1-|x|^2)) dx."""
    x, w = roots_legendre(200)
    rho = 0.5 * (x + 1)
    return float(4 * np.pi * 0.5 * np.sum(w * rho**2 * np.exp(-1 / (1 - rho**2))))


def mollifier(rho2):
    """Standard bump of |x|^2, normalized to unit mass on the unit ball."""
    rho2 = np.asarray(rho2, dtype=float)
    inside = rho2 < 1
    return np.where(inside, np.exp(-1 / (1 - np.where(inside, rho2, 0.0))), 0.0) / _bump_mass()


@dataclass(frozen=True)
class BogovskiiDomain:
    L: float
    zc: float = 0.0
    c: float = 0.25

    @property
    def inner_radius(self):
        return self.c * self.L

    @property
    def x0(self):
        return np.array([0.0, 0.0, self.zc])

    @property
    def diameter(self):
        return 2 * np.sqrt(2) * self.L

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x[..., 0] ** 2 + x[..., 1] ** 2 < self.L**2) & (np.abs(x[..., 2] - self.zc) < self.L)

    def w_U(self, dist2):
        """w_U at squared distance dist2 from x0."""
        i = self.inner_radius
        return mollifier(dist2 / i**2) / i**3


# ------------------------------------------------------------- kernel

def kernel_eval(U, x, y, n_s=32):
    """G_U(x, y) = int_0^1 (x - y)/s w_U(y + (x - y)/s) ds/s^3 on the analytic s-window."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    d = x - y
    v = y - U.x0
    i = U.inner_radius
    # |v + u d|^2 < i^2 with u = 1/s >= 1
    a = np.sum(d * d, axis=-1)
    b = 2 * np.sum(v * d, axis=-1)
    c = np.sum(v * v, axis=-1) - i**2
    disc = b**2 - 4 * a * c
    ok = (a > 0) & (disc > 0)
    asafe = np.where(ok, a, 1.0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    u1 = np.maximum((-b - sq) / (2 * asafe), 1.0)
    u2 = (-b + sq) / (2 * asafe)
    ok &= u2 > u1
    s_lo = np.where(ok, 1 / np.where(ok, u2, 1.0), 0.0)
    s_hi = np.where(ok, 1 / np.where(ok, u1, 1.0), 0.0)
    xs, ws = roots_legendre(n_s)
    half = 0.5 * (s_hi - s_lo)
    s = 0.5 * (s_hi + s_lo)[..., None] + half[..., None] * xs
    s = np.where(ok[..., None], s, 1.0)
    # |y + d/s - x0|^2 = |v|^2 + (b/s) + a/s^2
    dist2 = (c + i**2)[..., None] + b[..., None] / s + a[..., None] / s**2
    integrand = U.w_U(dist2) / s**4
    scal = np.where(ok, half * (integrand @ ws), 0.0)
    return d * scal[..., None]


# ------------------------------------------------------ angular quadrature

@lru_cache(maxsize=None)
def sphere_rule(n_mu, n_phi):
    """Gauss-Legendre in cos(theta) times trapezoid in phi; weights sum to 4 pi."""
    mu, wmu = roots_legendre(n_mu)
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    st = np.sqrt(1 - mu**2)
    om = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)),
                   np.outer(mu, np.ones(n_phi))], axis=-1).reshape(-1, 3)
    wt = np.outer(wmu, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
    return om, wt


def cap_rule(U, x, n_mu, n_phi):
    """Per-target directions covering only the cone where the ray x - rho om meets the ball.

    Outside the ball the cone has axis (x - x0)/|x - x0| and half-angle
    asin(i/|x - x0|); inside it is the whole sphere.  Returns om (B, D, 3), wt (B, D).
    """
    v = x - U.x0
    d = np.linalg.norm(v, axis=-1)
    i = U.inner_radius
    inside = d <= i
    cosa = np.where(inside, -1.0, np.sqrt(np.maximum(1 - (i / np.where(inside, 1.0, d)) ** 2, 0.0)))
    e3 = np.where(inside[:, None], np.array([0.0, 0.0, 1.0]), v / np.where(d > 0, d, 1.0)[:, None])
    # orthonormal frame around e3
    t = np.where(np.abs(e3[:, 2:3]) < 0.9, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    e1 = np.cross(e3, t)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(e3, e1)
    xm, wm = roots_legendre(n_mu)
    mu = 0.5 * (1 - cosa)[:, None] * xm + 0.5 * (1 + cosa)[:, None]       # (B, n_mu)
    wmu = 0.5 * (1 - cosa)[:, None] * wm
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    st = np.sqrt(np.maximum(1 - mu**2, 0.0))
    cp, sp = np.cos(phi), np.sin(phi)
    om = (mu[:, :, None, None] * e3[:, None, None, :]
          + st[:, :, None, None] * (cp[None, None, :, None] * e1[:, None, None, :]
                                    + sp[None, None, :, None] * e2[:, None, None, :]))
    B = x.shape[0]
    om = om.reshape(B, n_mu * n_phi, 3)
    wt = np.repeat(wmu * (2 * np.pi / n_phi), n_phi, axis=1)
    return om, wt


def _ball_chord(U, x, om):
    """[rho_lo, rho_hi] with |x - rho om - x0| < i, rho >= 0.  x (B,3), om (B,D,3)."""
    v = x - U.x0
    vo = np.einsum("bj,bdj->bd", v, om)
    vv = np.sum(v * v, axis=-1)[:, None]
    disc = vo**2 - vv + U.inner_radius**2
    sq = np.sqrt(np.maximum(disc, 0.0))
    lo = np.maximum(vo - sq, 0.0)
    hi = np.where(disc > 0, vo + sq, 0.0)
    hi = np.maximum(hi, lo)
    return lo, hi, vo, vv


def _cyl_exit(U, x, om):
    """u at which x + u om leaves U (x inside U).  x (B,3), om (B,D,3) or (D,3)."""
    if om.ndim == 2:
        om = np.broadcast_to(om[None], (x.shape[0],) + om.shape)
    px, py, pz = x[:, 0:1], x[:, 1:2], x[:, 2:3] - U.zc
    ox, oy, oz = om[..., 0], om[..., 1], om[..., 2]
    a = ox**2 + oy**2
    b = 2 * (px * ox + py * oy)
    c = px**2 + py**2 - U.L**2               # < 0 inside
    asafe = np.where(a > 1e-300, a, 1.0)
    u_r = np.where(a > 1e-300, (-b + np.sqrt(np.maximum(b**2 - 4 * a * c, 0.0))) / (2 * asafe), np.inf)
    with np.errstate(divide="ignore"):
        u_z = np.where(oz > 0, (U.L - pz) / np.where(oz > 0, oz, 1.0),
                       np.where(oz < 0, (-U.L - pz) / np.where(oz < 0, oz, 1.0), np.inf))
    return np.maximum(np.minimum(u_r, u_z), 0.0)


def _ray_eval(U, g, x, n_mu, n_phi, n_rho, n_u, batch_elems):
    """Separable ray formula at target points x (N,3); g(points (...,3)) -> (...) or (..., K)."""
    xr, wr = roots_legendre(n_rho)
    xu, wu = roots_legendre(n_u)
    N = x.shape[0]
    D = n_mu * n_phi
    if N == 0:
        # no targets inside U: shape the empty result from one probe of g
        probe = np.asarray(g(U.x0[None]))
        return np.zeros((0,) + probe.shape[1:] + (3,), dtype=np.result_type(probe, float))
    out = None
    B = max(1, int(batch_elems // (D * n_u)))
    for s0 in range(0, N, B):
        xb = x[s0:s0 + B]
        om, wt = cap_rule(U, xb, n_mu, n_phi)
        lo, hi, vo, vv = _ball_chord(U, xb, om)
        hr = 0.5 * (hi - lo)
        rho = 0.5 * (hi + lo)[..., None] + hr[..., None] * xr
        dist2 = rho**2 - 2 * rho * vo[..., None] + vv[..., None]
        wv = U.w_U(dist2) * (hr[..., None] * wr)
        A0 = wv.sum(-1)
        A1 = (wv * rho).sum(-1)
        A2 = (wv * rho**2).sum(-1)

        ue = _cyl_exit(U, xb, om)
        hu = 0.5 * ue
        u = hu[..., None] * (xu + 1)
        pts = xb[:, None, None, :] + u[..., None] * om[:, :, None, :]
        gv = np.asarray(g(pts))
        wq = hu[..., None] * wu
        if gv.ndim == 4:                       # several g at once
            wq = wq[..., None]
            u_ = u[..., None]
            M0 = (gv * wq).sum(2)
            M1 = (gv * wq * u_).sum(2)
            M2 = (gv * wq * u_**2).sum(2)
            comb = A0[..., None] * M2 + 2 * A1[..., None] * M1 + A2[..., None] * M0   # (B, D, K)
            hb = -np.einsum("bdk,bdj,bd->bkj", comb, om, wt)
        else:
            M0 = (gv * wq).sum(-1)
            M1 = (gv * wq * u).sum(-1)
            M2 = (gv * wq * u**2).sum(-1)
            comb = A0 * M2 + 2 * A1 * M1 + A2 * M0
            hb = -np.einsum("bd,bdj,bd->bj", comb, om, wt)
        if out is None:
            out = np.zeros((N,) + hb.shape[1:], dtype=hb.dtype)
        out[s0:s0 + B] = hb
    return out


@dataclass
class QuadratureSpec:
    n_mu: int = 12
    n_phi: int = 24
    n_rho: int = 12
    n_u: int = 16
    batch_elems: int = 2_000_000


def div_inverse(g, U, points, quad=None, check_mean=None):
    """h = div_U^{-1} g at 3D points (..., 3).

    g: callable on (..., 3) arrays (returning (...) or (..., K)).  h vanishes
    exactly outside U.  check_mean: optional (grid points, cell volume) used to
    assert the mean-zero and support hypotheses on samples.
    """
    quad = quad or QuadratureSpec()
    pts = np.asarray(points, dtype=float)
    shape = pts.shape[:-1]
    flat = pts.reshape(-1, 3)
    if check_mean is not None:
        gp, vol = check_mean
        gs = np.asarray(g(gp))
        inside = U.contains(gp)
        if np.any(np.abs(gs[~inside]) > 0):
            raise DomainError("supp g is not inside U")
        tot = np.sum(gs) * vol
        if abs(tot) > 1e-8 * max(np.sum(np.abs(gs)) * vol, 1e-300):
            raise DomainError(f"g is not mean-zero (int g = {tot:.3e})")
    inside = U.contains(flat)
    h = _ray_eval(U, g, flat[inside], quad.n_mu, quad.n_phi, quad.n_rho, quad.n_u, quad.batch_elems)
    out = np.zeros((flat.shape[0],) + h.shape[1:], dtype=h.dtype)
    out[inside] = h
    out = out.reshape(shape + h.shape[1:])
    return out


def direct_div_inverse(g, U, points, n_mu=10, n_phi=20, n_u=24, n_s=32):
    """Cross-check path: polar quadrature of G_U(x, y) g(y) around x using kernel_eval."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    om, wt = sphere_rule(n_mu, n_phi)
    xu, wu = roots_legendre(n_u)
    out = []
    for x in pts:
        if not U.contains(x):
            out.append(np.zeros(3))
            continue
        ue = _cyl_exit(U, x[None], om)[0]
        u = 0.5 * ue[:, None] * (xu + 1)
        y = x[None, None, :] + u[..., None] * om[:, None, :]
        G = kernel_eval(U, x[None, None, :], y, n_s=n_s)
        gv = np.asarray(g(y))
        integ = G * (gv * u**2 * 0.5 * ue[:, None] * wu)[..., None]
        out.append(np.einsum("duj,d->j", integ, wt))
    return np.array(out).reshape(np.shape(points)[:-1] + (3,))


# ----------------------------------------------------------- mode path

def mode_source(gm, m):
    """3D callable Re-less complex g = g_m(r, z) e^{i m theta} from a callable g_m."""
    def g(p):
        r = np.hypot(p[..., 0], p[..., 1])
        th = np.arctan2(p[..., 1], p[..., 0])
        return gm(r, p[..., 2]) * np.exp(1j * m * th)
    return g


def div_inverse_mode(gm, m, U, r, z, quad=None):
    """Mode-m path: h(r, theta = 0, z) with complex g_m e^{i m theta}.

    Rotation equivariance (x0 on the axis, radial w) makes the physical
    (h^r, h^theta, h^z) at theta = 0 the Cartesian (h_x, h_y, h_z); the result
    is the mode amplitude, so d_theta commutes with the operator by construction.
    """
    R, Z = np.meshgrid(np.asarray(r, float), np.asarray(z, float), indexing="ij")
    pts = np.stack([R, np.zeros_like(R), Z], axis=-1)
    h = div_inverse(mode_source(gm, m), U, pts, quad)
    return np.moveaxis(h, -1, 0)          # (3, nr, nz): r, theta, z


def sampled_mode_source(r, z, values):
    """Bicubic interpolant of complex g_m samples on a tensor (r, z) grid, zero outside."""
    sr = RectBivariateSpline(r, z, np.real(values))
    si = RectBivariateSpline(r, z, np.imag(values))

    def gm(rr, zz):
        inside = (rr >= r[0]) & (rr <= r[-1]) & (zz >= z[0]) & (zz <= z[-1])
        a, b = np.clip(rr, r[0], r[-1]), np.clip(zz, z[0], z[-1])
        return np.where(inside, sr.ev(a, b) + 1j * si.ev(a, b), 0.0)
    return gm


# ------------------------------------------------------- Cartesian helpers

def grid3(U, n):
    """Cell-centred n^3 grid on the bounding box of U."""
    L = U.L
    x = -L + (np.arange(n) + 0.5) * (2 * L / n)
    z = U.zc + x
    X, Y, Z = np.meshgrid(x, x, z, indexing="ij")
    return np.stack([X, Y, Z], axis=-1), 2 * L / n


def fd_div(h, dx):
    """Centred divergence of (n, n, n, 3) samples with zero padding (h = 0 outside U)."""
    out = np.zeros(h.shape[:3], dtype=h.dtype)
    for ax in range(3):
        p = np.pad(h[..., ax], [(1, 1) if k == ax else (0, 0) for k in range(3)])
        sp = [slice(None)] * 3
        sm = [slice(None)] * 3
        sp[ax], sm[ax] = slice(2, None), slice(None, -2)
        out += (p[tuple(sp)] - p[tuple(sm)]) / (2 * dx)
    return out


def fd_grad_l2(h, dx):
    """||grad h||_{L^2} from centred differences (zero padding)."""
    tot = 0.0
    for comp in range(3):
        c = h[..., comp]
        for ax in range(3):
            p = np.pad(c, [(1, 1) if k == ax else (0, 0) for k in range(3)])
            sp = [slice(None)] * 3
            sm = [slice(None)] * 3
            sp[ax], sm[ax] = slice(2, None), slice(None, -2)
            tot += np.sum(np.abs((p[tuple(sp)] - p[tuple(sm)]) / (2 * dx)) ** 2)
    return float(np.sqrt(tot * dx**3))


@dataclass
class RandomDivSource:
    """g = div F, F = sum_j a_j exp(-1/(1 - |x - c_j|^2/rho_j^2)): mean zero, supp in U."""
    centers: np.ndarray
    radii: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def draw(cls, U, rng, n_terms=2):
        cs, rs, As = [], [], []
        for _ in range(n_terms):
            rho = rng.uniform(0.3, 0.5) * U.L
            while True:
                c = rng.uniform(-U.L, U.L, 3)
                c[2] += U.zc
                if np.hypot(c[0], c[1]) + rho < 0.95 * U.L and abs(c[2] - U.zc) + rho < 0.95 * U.L:
                    break
            cs.append(c)
            rs.append(rho)
            As.append(rng.normal(size=3))
        return cls(np.array(cs), np.array(rs), np.array(As))

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1])
        for c, rho, a in zip(self.centers, self.radii, self.coeffs):
            xi = (p - c) / rho
            q = 1 - np.sum(xi * xi, axis=-1)
            inside = q > 0
            qs = np.where(inside, q, 1.0)
            out += np.where(inside, -2 * np.exp(-1 / qs) / qs**2, 0.0) * (xi @ a) / rho
        return out

    def c1_norm(self, pts):
        """max|g| + max|grad g| sampled on pts, gradient by small centred differences."""
        e = 1e-5 * self.radii.min()
        gmax = np.abs(self(pts)).max()
        grad = np.zeros(pts.shape[:-1] + (3,))
        for k in range(3):
            d = np.zeros(3)
            d[k] = e
            grad[..., k] = (self(pts + d) - self(pts - d)) / (2 * e)
        return float(gmax + np.sqrt(np.sum(grad**2, axis=-1)).max())


class MultiSource:
    """Stack several scalar sources into one callable returning (..., K)."""

    def __init__(self, sources):
        self.sources = list(sources)

    def __call__(self, p):
        return np.stack([s(p) for s in self.sources], axis=-1)


@dataclass
class BumpGradientBasis:
    """Basis d_k B_j, B_j = exp(-1/(1 - |x - c_j|^2/rho_j^2)); returns (..., 3 n_centres).

    Every linear combination is a smooth mean-zero source supported in U, and
    div^-1 is linear, so random sources can be drawn as random coefficients.
    """
    centers: np.ndarray
    radii: np.ndarray

    @classmethod
    def draw(cls, U, rng, n_centres=4):
        src = RandomDivSource.draw(U, rng, n_terms=n_centres)
        return cls(src.centers, src.radii)

    @property
    def size(self):
        return 3 * len(self.radii)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        out = []
        for c, rho in zip(self.centers, self.radii):
            xi = (p - c) / rho
            q = 1 - np.sum(xi * xi, axis=-1)
            inside = q > 0
            qs = np.where(inside, q, 1.0)
            pre = np.where(inside, -2 * np.exp(-1 / qs) / qs**2, 0.0) / rho
            out.extend([pre * xi[..., k] for k in range(3)])
        return np.stack(out, axis=-1)

    def combo(self, coeffs):
        """Scalar source sum_k coeffs[k] * basis_k."""
        coeffs = np.asarray(coeffs, dtype=float)
        return lambda p: self(p) @ coeffs


# -------------------------------------------------- div-free initial data

@dataclass
class DivFreeData:
    m: int
    r: np.ndarray
    z: np.ndarray
    rweights: np.ndarray
    b0: np.ndarray          # (3, nr, nz) physical r, theta, z mode amplitudes
    correction: np.ndarray  # div^-1 (chi' b~z)
    chi: np.ndarray
    btilde: np.ndarray      # (3, nr) 2D packet field
    method: str

    def _ip(self, a, b):
        dz = self.z[1] - self.z[0]
        return float(np.pi * np.sum(np.real(a * np.conj(b)) * self.rweights[None, :, None]) * dz)

    def chi_btilde(self):
        return self.btilde[:, :, None] * self.chi[None, None, :]

    @property
    def ell_half(self):
        """||chi||_{L^2_z}."""
        dz = self.z[1] - self.z[0]
        return float(np.sqrt(np.sum(self.chi**2) * dz))

    def pairing(self):
        return self._ip(self.b0, self.chi_btilde())

    def b0_norm(self):
        return np.sqrt(self._ip(self.b0, self.b0))

    def btilde_norm_xy(self):
        return float(np.sqrt(np.pi * np.sum(np.abs(self.btilde) ** 2 * self.rweights[None])))

    def pairing_defect(self):
        ref = self.ell_half * self.b0_norm() * self.btilde_norm_xy()
        return abs(self.pairing() - ref) / ref

    def divergence(self):
        """Mode divergence r^-1 d_r(r b^r) + (i m / r) b^theta + d_z b^z by differences."""
        from . import modeops
        mesh = modeops.RadialMesh.from_nodes(self.r)
        r = self.r[:, None]
        br, bth, bz = self.b0
        d_rbr = np.stack([modeops.d_r(mesh, (self.r * br[:, k])) for k in range(br.shape[1])], axis=1)
        dz = self.z[1] - self.z[0]
        dbz = np.gradient(bz, dz, axis=1)
        return d_rbr / r + 1j * self.m * bth / r + dbz


def divfree_initial_data(slice_, chi_width, z, U=None, method="angular", quad=None):
    """b0 = chi b~0 - div_U^{-1}(chi' b~0^z) for a packet slice (mode lam).

    method="angular": the exact mode right inverse h = r g/(i m) e_theta, with
    supp h = supp g; method="bogovskii": the cylinder operator (mode path).
    """
    m = slice_.lam
    r = slice_.r
    z = np.asarray(z, dtype=float)
    chi = cutoff(z, chi_width)
    dchi = cutoff_deriv(z, chi_width)
    bt = np.array(slice_.b_components())
    g = slice_.bz[:, None] * dchi[None, :]
    if method == "angular":
        corr = np.zeros((3,) + g.shape, dtype=complex)
        corr[1] = r[:, None] * g / (1j * m)
    elif method == "bogovskii":
        if U is None:
            U = BogovskiiDomain(L=max(r.max(), 2 * chi_width) * 1.05)
        if r.max() >= U.L or 2 * chi_width >= U.L:
            raise DomainError("support of chi' b~z exceeds U")
        gm = sampled_mode_source(r, z, g)
        corr = div_inverse_mode(gm, m, U, r, z, quad)
    else:
        raise ValueError(f"unknown method {method!r}")
    b0 = bt[:, :, None] * chi[None, None, :] - corr
    return DivFreeData(m, r, z, slice_.weights, b0, corr, chi, bt, method)
