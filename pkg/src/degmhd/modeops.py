"""Radial operators for a single angular mode on a monotone (possibly stretched) mesh.

The Laplacian for mode lam, r^-1 d_r(r d_r) - lam^2/r^2, is written in flux
form with Dirichlet ghosts beyond both ends.  Multiplied by the cell volumes
it is a symmetric tridiagonal matrix, so it is self-adjoint in the discrete
inner product pi * sum_j V_j a_j conj(b_j) that approximates
int Re(a e^{i lam theta}) Re(b e^{i lam theta}) r dr dtheta.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded


@dataclass(frozen=True)
class RadialMesh:
    nodes: tuple

    @classmethod
    def from_nodes(cls, r):
        r = np.asarray(r, dtype=float)
        if np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise ValueError("mesh nodes must be positive and increasing")
        return cls(tuple(r))

    @classmethod
    def log_mapped(cls, r0, ell, xi_lo, xi_hi, n):
        """Nodes r = r0 + ell e^xi, xi uniform on [xi_lo, xi_hi]."""
        xi = np.linspace(xi_lo, xi_hi, n)
        return cls.from_nodes(r0 + ell * np.exp(xi))

    @property
    def r(self):
        return np.asarray(self.nodes)

    @property
    def n(self):
        return len(self.nodes)

    @property
    def faces(self):
        r = self.r
        mid = 0.5 * (r[1:] + r[:-1])
        lo = r[0] - (mid[0] - r[0])
        hi = r[-1] + (r[-1] - mid[-1])
        return np.concatenate([[lo], mid, [hi]])

    @property
    def volumes(self):
        """int r dr over each cell."""
        f = self.faces
        return 0.5 * (f[1:] ** 2 - f[:-1] ** 2)

    @property
    def kappa(self):
        """Face conductances r_face / (node spacing), including the two ghost faces."""
        r, f = self.r, self.faces
        inner = f[1:-1] / np.diff(r)
        lo = f[0] / (2 * (r[0] - f[0]))       # ghost node mirrored through the face
        hi = f[-1] / (2 * (f[-1] - r[-1]))
        return np.concatenate([[lo], inner, [hi]])


def laplacian_bands(mesh, lam):
    """Sub, main and super diagonals of Delta_lam (not symmetrized)."""
    k, V, r = mesh.kappa, mesh.volumes, mesh.r
    main = -(k[:-1] + k[1:]) / V - lam**2 / r**2
    sub = k[1:-1] / V[1:]
    sup = k[1:-1] / V[:-1]
    return sub, main, sup


def laplacian_matrix(mesh, lam):
    sub, main, sup = laplacian_bands(mesh, lam)
    return sp.diags([sub, main, sup], [-1, 0, 1], format="csr")


def apply_laplacian(mesh, lam, psi):
    sub, main, sup = laplacian_bands(mesh, lam)
    out = main * psi
    out[1:] += sub * psi[:-1]
    out[:-1] += sup * psi[1:]
    return out


def solve_shifted(mesh, lam, rhs, shift=0.0):
    """Solve (shift - Delta_lam) x = rhs by a banded (tridiagonal) solve."""
    sub, main, sup = laplacian_bands(mesh, lam)
    ab = np.zeros((3, mesh.n), dtype=complex if np.iscomplexobj(rhs) else float)
    ab[0, 1:] = -sup
    ab[1] = shift - main
    ab[2, :-1] = -sub
    x = solve_banded((1, 1), ab, rhs)
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("singular tridiagonal solve")
    return x


def inv_neg_laplacian(mesh, lam, rhs):
    return solve_shifted(mesh, lam, rhs, 0.0)


def inner(mesh, a, b):
    """pi * sum V a conj(b), real part (mode lam != 0)."""
    return float(np.pi * np.sum(mesh.volumes * np.real(a * np.conj(b))))


def grad_energy(mesh, lam, psi):
    """<psi, -Delta psi> = ||d_r psi||^2 + lam^2 ||psi/r||^2 in the discrete form."""
    return inner(mesh, psi, -apply_laplacian(mesh, lam, psi))


def d_r(mesh, a):
    """Centred derivative on the nonuniform mesh (second order), zero ghosts."""
    r = mesh.r
    ap = np.concatenate([[0.0], a, [0.0]])
    f = mesh.faces
    rp = np.concatenate([[2 * f[0] - r[0]], r, [2 * f[-1] - r[-1]]])
    h1 = rp[1:-1] - rp[:-2]
    h2 = rp[2:] - rp[1:-1]
    return (h1**2 * ap[2:] - h2**2 * ap[:-2] + (h2**2 - h1**2) * ap[1:-1]) / (h1 * h2 * (h1 + h2))
