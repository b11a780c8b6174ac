"""Cylindrical grids, fields in the coordinate basis and discrete vector calculus.

Fields are sampled on a cell-centred radial grid r_j = (j + 1/2) dr, so no
node sits on the axis.  Ghost values across the axis come from the parity
of each component: a scalar carrying the angular factor e^{i m theta} has
parity (-1)^m in r, U^r has the opposite parity and U^theta, U^z share
the scalar one.  Derivatives are second-order centred, one-sided second
order at the outer radius and at both z ends.

Non-axisymmetric data is carried as a single angular mode: the physical
field is Re(a e^{i m theta}) and d_theta acts as multiplication by i m.
"""

import struct
from dataclasses import dataclass, field as dc_field

import numpy as np


# ---------------------------------------------------------------- grids

@dataclass(frozen=True)
class RGrid:
    r_max: float
    n_r: int

    def __post_init__(self):
        if self.n_r < 3 or not self.r_max > 0:
            raise ValueError("RGrid needs r_max > 0 and n_r >= 3")

    @property
    def dr(self):
        return self.r_max / self.n_r

    @property
    def r(self):
        return (np.arange(self.n_r) + 0.5) * self.dr

    @property
    def shape(self):
        return (self.n_r,)

    @property
    def weights(self):
        """Quadrature weights for r dr."""
        return self.r * self.dr


@dataclass(frozen=True)
class RZGrid:
    r_max: float
    n_r: int
    z_max: float
    n_z: int

    def __post_init__(self):
        if self.n_z < 4:
            raise ValueError("RZGrid needs n_z >= 4")
        if self.n_r < 3 or not (self.r_max > 0 and self.z_max > 0):
            raise ValueError("RZGrid needs positive extents and n_r >= 3")

    @property
    def rgrid(self):
        return RGrid(self.r_max, self.n_r)

    @property
    def dr(self):
        return self.r_max / self.n_r

    @property
    def r(self):
        return (np.arange(self.n_r) + 0.5) * self.dr

    @property
    def z(self):
        return np.linspace(-self.z_max, self.z_max, self.n_z)

    @property
    def dz(self):
        return 2 * self.z_max / (self.n_z - 1)

    @property
    def shape(self):
        return (self.n_r, self.n_z)

    def mesh(self):
        return np.meshgrid(self.r, self.z, indexing="ij")

    @property
    def weights(self):
        """Quadrature weights for r dr dz (trapezoid in z)."""
        wz = np.full(self.n_z, self.dz)
        wz[0] = wz[-1] = 0.5 * self.dz
        return (self.r * self.dr)[:, None] * wz[None, :]


def _rcol(grid):
    r = grid.r
    return r[:, None] if isinstance(grid, RZGrid) else r


# --------------------------------------------------------------- fields

@dataclass
class ScalarField:
    grid: object
    values: np.ndarray
    m: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"scalar samples {self.values.shape} do not match grid {self.grid.shape}")

    @property
    def parity(self):
        return 1 if self.m % 2 == 0 else -1


@dataclass
class AxiVectorField:
    """Vector field U^r d_r + U^theta d_theta + U^z d_z on an RGrid or RZGrid."""
    grid: object
    ur: np.ndarray
    uth: np.ndarray
    uz: np.ndarray
    m: int = 0

    def __post_init__(self):
        for name in ("ur", "uth", "uz"):
            a = np.asarray(getattr(self, name))
            if a.shape != self.grid.shape:
                raise ValueError(f"component {name} has shape {a.shape}, grid is {self.grid.shape}")
            setattr(self, name, a)

    @classmethod
    def zeros(cls, grid, m=0):
        z = np.zeros(grid.shape, dtype=complex if m else float)
        return cls(grid, z, z.copy(), z.copy(), m)

    def physical(self):
        """Components in the orthonormal frame (e_r, e_theta, e_z)."""
        return [self.ur, _rcol(self.grid) * self.uth, self.uz]

    def parities(self):
        p = 1 if self.m % 2 == 0 else -1
        return (-p, p, p)


@dataclass
class ModeField:
    """Single angular mode on arbitrary radial nodes.

    amp has shape (ncomp, n) with components in the orthonormal frame; the
    physical field is Re(amp * e^{i m theta}).  weights integrate r dr.
    """
    m: int
    amp: np.ndarray
    r: np.ndarray
    weights: np.ndarray
    grid: object = dc_field(default=None)

    def __post_init__(self):
        self.amp = np.atleast_2d(np.asarray(self.amp))
        self.r = np.asarray(self.r, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.amp.shape[-1] != self.r.size or self.weights.size != self.r.size:
            raise ValueError("ModeField amplitude, nodes and weights must align")

    @classmethod
    def on_grid(cls, m, amp, grid):
        return cls(m, amp, grid.r, grid.weights, grid)


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError("fields live on different grids")


# ------------------------------------------------------- finite differences

def d_r(a, grid, parity=1):
    """First r-derivative with axis ghost a_{-1} = parity * a_0."""
    a = np.asarray(a)
    h = grid.dr
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2 * h)
    out[0] = (a[1] - parity * a[0]) / (2 * h)
    out[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
    return out


def d_rr(a, grid, parity=1):
    a = np.asarray(a)
    h = grid.dr
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - 2 * a[1:-1] + a[:-2]) / h**2
    out[0] = (a[1] - 2 * a[0] + parity * a[0]) / h**2
    out[-1] = (2 * a[-1] - 5 * a[-2] + 4 * a[-3] - a[-4]) / h**2
    return out


def d_z(a, grid):
    a = np.asarray(a)
    h = grid.dz
    out = np.empty_like(a)
    out[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2 * h)
    out[:, 0] = (-3 * a[:, 0] + 4 * a[:, 1] - a[:, 2]) / (2 * h)
    out[:, -1] = (3 * a[:, -1] - 4 * a[:, -2] + a[:, -3]) / (2 * h)
    return out


def d_zz(a, grid):
    a = np.asarray(a)
    h = grid.dz
    out = np.empty_like(a)
    out[:, 1:-1] = (a[:, 2:] - 2 * a[:, 1:-1] + a[:, :-2]) / h**2
    out[:, 0] = (2 * a[:, 0] - 5 * a[:, 1] + 4 * a[:, 2] - a[:, 3]) / h**2
    out[:, -1] = (2 * a[:, -1] - 5 * a[:, -2] + 4 * a[:, -3] - a[:, -4]) / h**2
    return out


def _dz_or_zero(a, grid):
    return d_z(a, grid) if isinstance(grid, RZGrid) else np.zeros_like(a)


def _dzz_or_zero(a, grid):
    return d_zz(a, grid) if isinstance(grid, RZGrid) else np.zeros_like(a)


# ------------------------------------------------------- vector calculus

def curl_axi(U):
    """curl in the coordinate basis, d_theta -> i m."""
    g, r = U.grid, _rcol(U.grid)
    im = 1j * U.m if U.m else 0.0
    pr, pth, pz = U.parities()
    cr = im * U.uz / r - r * _dz_or_zero(U.uth, g)
    cth = (_dz_or_zero(U.ur, g) - d_r(U.uz, g, pz)) / r
    cz = (d_r(r**2 * U.uth, g, pth) - im * U.ur) / r
    return AxiVectorField(g, cr, cth, cz, U.m)


def div_axi(U):
    g, r = U.grid, _rcol(U.grid)
    pr = U.parities()[0]
    out = d_r(r * U.ur, g, -pr) / r + _dz_or_zero(U.uz, g)
    if U.m:
        out = out + 1j * U.m * U.uth
    return ScalarField(g, out, U.m)


def grad_cyl(f):
    g, r = f.grid, _rcol(f.grid)
    vals = f.values
    gr = d_r(vals, g, f.parity)
    gth = 1j * f.m * vals / r**2 if f.m else np.zeros_like(vals)
    gz = _dz_or_zero(vals, g)
    return AxiVectorField(g, gr, gth, gz, f.m)


def laplacian_cyl(f):
    g, r = f.grid, _rcol(f.grid)
    v = f.values
    out = d_rr(v, g, f.parity) + d_r(v, g, f.parity) / r - (f.m**2) * v / r**2 + _dzz_or_zero(v, g)
    return ScalarField(g, out, f.m)


def slashed_laplacian(f):
    """(d_r^2 + (3/r) d_r + d_z^2) applied to a theta-component (even in r)."""
    g, r = f.grid, _rcol(f.grid)
    v = f.values
    out = d_rr(v, g, 1) + 3 * d_r(v, g, 1) / r + _dzz_or_zero(v, g)
    return ScalarField(g, out, f.m)


def material_derivative(U, V):
    """(U . grad) V for real axisymmetric fields, coordinate components."""
    _check_same_grid(U, V)
    if U.m or V.m:
        raise ValueError("material_derivative is defined for axisymmetric (m = 0) fields")
    g, r = U.grid, _rcol(U.grid)
    pr, pth, pz = V.parities()
    Dz = lambda a: _dz_or_zero(a, g)
    out_r = U.ur * d_r(V.ur, g, pr) + U.uz * Dz(V.ur) - r * U.uth * V.uth
    out_th = U.ur * d_r(r * V.uth, g, -pth) / r + U.uz * Dz(V.uth) + U.uth * V.ur / r
    out_z = U.ur * d_r(V.uz, g, pz) + U.uz * Dz(V.uz)
    return AxiVectorField(g, out_r, out_th, out_z)


# ------------------------------------------------------------------ norms

N_THETA = 64


def _components(field):
    """Physical components, weights, mode index and parities of a field."""
    if isinstance(field, AxiVectorField):
        return field.physical(), field.grid.weights, field.m, [p for p in field.parities()], field.grid
    if isinstance(field, ScalarField):
        return [field.values], field.grid.weights, field.m, [field.parity], field.grid
    if isinstance(field, ModeField):
        p = 1 if field.m % 2 == 0 else -1
        par = [p] if field.amp.shape[0] == 1 else [-p, -p, p][: field.amp.shape[0]]
        return list(field.amp), field.weights, field.m, par, field.grid
    raise TypeError(f"unsupported field type {type(field).__name__}")


def _theta_samples(m, n_theta=N_THETA):
    """theta nodes over one period and the weight giving int_0^{2 pi} d theta."""
    if m == 0:
        return np.zeros(1), 2 * np.pi
    th = 2 * np.pi * np.arange(n_theta) / (n_theta * abs(m))
    return th, 2 * np.pi / n_theta


def _pointwise_abs(comps, m, th):
    """|v|(theta_k, x) for each theta sample; shape (n_theta, ...)."""
    if m == 0:
        return np.sqrt(sum(np.real(c) ** 2 for c in comps))[None]
    e = np.exp(1j * m * th)
    e = e.reshape((-1,) + (1,) * np.ndim(comps[0]))
    return np.sqrt(sum(np.real(c[None] * e) ** 2 for c in comps))


def lp_norm_of(comps, weights, m, p):
    th, wth = _theta_samples(m)
    v = _pointwise_abs(comps, m, th)
    if np.isinf(p):
        return float(v.max()) if v.size else 0.0
    return float((wth * np.sum(v**p * weights[None])) ** (1.0 / p))


def _derivative_family(comps, parities, m, grid, s):
    """All mixed partials d_r^a d_z^b (i m / r)^c of the components, a+b+c <= s."""
    has_z = isinstance(grid, RZGrid)
    out = []
    for a in range(s + 1):
        for b in range(s + 1 - a if has_z else 1):
            for c in range(s + 1 - a - b if m else 1):
                terms = []
                for comp, par in zip(comps, parities):
                    v, pp = comp, par
                    for _ in range(c):
                        v = 1j * m * v / _rcol(grid)
                        pp = -pp
                    for _ in range(b):
                        v = d_z(v, grid)
                    for _ in range(a):
                        v = d_r(v, grid, pp)
                        pp = -pp
                    terms.append(v)
                out.append(terms)
    return out


def sobolev_norm(field, s, p):
    """W^{s,p} norm with all mixed cylindrical partials of order <= s."""
    if s < 0 or int(s) != s:
        raise ValueError("s must be a nonnegative integer")
    if not p >= 1:
        raise ValueError("p must be >= 1")
    comps, weights, m, par, grid = _components(field)
    if s == 0:
        return lp_norm_of(comps, weights, m, p)
    if grid is None:
        raise ValueError("derivatives need a uniform grid; this ModeField has none")
    fam = _derivative_family(comps, par, m, grid, int(s))
    vals = [lp_norm_of(terms, weights, m, p) for terms in fam]
    if np.isinf(p):
        return max(vals)
    return float(np.sum(np.array(vals) ** p) ** (1.0 / p))


def mixed_norm(field, p):
    """L^2 in theta of the L^p norm in r dr (and dz when present)."""
    if not p >= 1:
        raise ValueError("p must be >= 1")
    comps, weights, m, _, _ = _components(field)
    th, wth = _theta_samples(m)
    v = _pointwise_abs(comps, m, th)
    axes = tuple(range(1, v.ndim))
    if np.isinf(p):
        inner = v.max(axis=axes)
    else:
        inner = np.sum(v**p * weights[None], axis=axes) ** (1.0 / p)
    return float(np.sqrt(wth * np.sum(inner**2)))


def inner_product(a, b):
    """int a.b r dr dtheta (dz) with the coordinate metric diag(1, r^2, 1)."""
    ca, wa, ma, _, _ = _components(a)
    cb, wb, mb, _, _ = _components(b)
    if ma != mb or len(ca) != len(cb) or np.shape(wa) != np.shape(wb):
        raise ValueError("inner product of incompatible fields")
    if ma == 0:
        return float(2 * np.pi * sum(np.sum(np.real(x) * np.real(y) * wa) for x, y in zip(ca, cb)))
    return float(np.pi * sum(np.sum(np.real(x * np.conj(y)) * wa) for x, y in zip(ca, cb)))


def hardy_gap(u, grid, ell):
    """||(r d_r + ell + 1) u||^2 - ell^2 ||u||^2 in L^2(r dr); u even in r."""
    w = grid.weights
    lhs = np.sum(np.abs(grid.r * d_r(u, grid, 1) + (ell + 1) * u) ** 2 * w)
    return float(lhs - ell**2 * np.sum(np.abs(u) ** 2 * w)), float(np.sum(np.abs(u) ** 2 * w))


# ------------------------------------------------------------ serialization

_MAGIC = b"DGMF"
_KINDS = {ScalarField: 0, AxiVectorField: 1}


def save_field(path, field):
    """Binary container: header of little-endian ints/doubles then arrays."""
    kind = _KINDS[type(field)]
    g = field.grid
    has_z = isinstance(g, RZGrid)
    arrays = [field.values] if kind == 0 else [field.ur, field.uth, field.uz]
    cplx = any(np.iscomplexobj(a) for a in arrays)
    n_z = g.n_z if has_z else 0
    z_max = g.z_max if has_z else 0.0
    dz = g.dz if has_z else 0.0
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<5i", kind, int(field.m), int(cplx), g.n_r, n_z))
        fh.write(struct.pack("<4d", g.r_max, g.dr, z_max, dz))
        for a in arrays:
            a = np.ascontiguousarray(a, dtype="<c16" if cplx else "<f8")
            fh.write(a.tobytes(order="C"))


def load_field(path):
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a degmhd field file")
        kind, m, cplx, n_r, n_z = struct.unpack("<5i", fh.read(20))
        r_max, _, z_max, _ = struct.unpack("<4d", fh.read(32))
        grid = RZGrid(r_max, n_r, z_max, n_z) if n_z else RGrid(r_max, n_r)
        dt = np.dtype("<c16" if cplx else "<f8")
        count = int(np.prod(grid.shape))
        arrs = [np.frombuffer(fh.read(count * dt.itemsize), dtype=dt).reshape(grid.shape).copy()
                for _ in range(1 if kind == 0 else 3)]
    if kind == 0:
        return ScalarField(grid, arrs[0], m)
    return AxiVectorField(grid, *arrs, m)


def export_csv(path, field, component=0):
    """Write r,z,value rows (value is the real part of the chosen component)."""
    g = field.grid
    vals = field.values if isinstance(field, ScalarField) else [field.ur, field.uth, field.uz][component]
    vals = np.real(vals)
    with open(path, "w") as fh:
        fh.write("r,z,value\n")
        if isinstance(g, RZGrid):
            for i, r in enumerate(g.r):
                for k, z in enumerate(g.z):
                    fh.write(f"{r:.12g},{z:.12g},{vals[i, k]:.12g}\n")
        else:
            for i, r in enumerate(g.r):
                fh.write(f"{r:.12g},0,{vals[i]:.12g}\n")
