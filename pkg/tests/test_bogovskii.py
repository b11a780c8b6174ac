import numpy as np
import pytest

from degmhd import background as bg
from degmhd import bogovskii as bo
from degmhd import wavepacket as wp

QUAD = bo.QuadratureSpec(n_mu=8, n_phi=16, n_rho=8, n_u=12)


@pytest.fixture(scope="module")
def U():
    return bo.BogovskiiDomain(L=1.0)


@pytest.fixture(scope="module")
def source(U):
    return bo.RandomDivSource.draw(U, np.random.default_rng(3), n_terms=1)


def test_zero_source(U):
    pts = np.random.default_rng(0).uniform(-0.9, 0.9, (20, 3))
    h = bo.div_inverse(lambda p: np.zeros(p.shape[:-1]), U, pts, QUAD)
    assert h.shape == (20, 3) and np.all(h == 0)


def test_kernel_vanishes_off_cone(U):
    # the ray from x away from y misses the averaging ball
    x = np.array([0.0, 0.0, 0.8])
    y = np.array([0.0, 0.0, 0.5])
    assert np.all(bo.kernel_eval(U, x, y) == 0)
    # ray from x through the centre side is live
    x2 = np.array([0.0, 0.0, 0.5])
    y2 = np.array([0.0, 0.0, 0.8])
    assert np.linalg.norm(bo.kernel_eval(U, x2, y2)) > 0


def test_kernel_dilation_scaling():
    U1, U2 = bo.BogovskiiDomain(1.0), bo.BogovskiiDomain(2.0)
    x = np.array([0.1, 0.2, 0.05])
    y = np.array([-0.1, 0.0, 0.3])
    G1 = bo.kernel_eval(U1, x, y, n_s=64)
    G2 = bo.kernel_eval(U2, 2 * x, 2 * y, n_s=64)
    assert np.allclose(G2, G1 / 4, rtol=1e-10)


def test_kernel_ns_convergence(U):
    x = np.array([0.1, -0.1, 0.0])
    y = np.array([0.3, 0.2, -0.2])
    ref = bo.kernel_eval(U, x, y, n_s=128)
    errs = [np.linalg.norm(bo.kernel_eval(U, x, y, n_s=n) - ref) for n in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-5 * np.linalg.norm(ref)


def test_support_is_exact(U, source):
    out = np.array([[1.0, 0.1, 0.0], [0.0, 0.0, 1.2], [0.8, 0.8, 0.0]])
    assert np.all(bo.div_inverse(source, U, out, QUAD) == 0)


def test_divergence_recovers_source(U, source):
    x = source.centers[0] + 0.3 * source.radii[0] * np.array([1.0, 0.0, 0.0])
    e = 2e-3
    pts = np.array([x + s * e * np.eye(3)[k] for k in range(3) for s in (1, -1)])
    h = bo.div_inverse(source, U, pts, bo.QuadratureSpec(n_mu=16, n_phi=32, n_rho=16, n_u=24))
    div = sum((h[2 * k, k] - h[2 * k + 1, k]) / (2 * e) for k in range(3))
    g = source(x[None])[0]
    assert div == pytest.approx(g, rel=0.05, abs=0.02 * source.c1_norm(x[None]))


def test_domain_errors(U):
    pts, dx = bo.grid3(U, 12)
    with pytest.raises(bo.DomainError):
        bo.div_inverse(lambda p: np.ones(p.shape[:-1]) * U.contains(p), U, pts[:1, 0, 0],
                       QUAD, check_mean=(pts, dx**3))
    big = bo.BogovskiiDomain(3.0)
    wide = bo.RandomDivSource.draw(big, np.random.default_rng(1), n_terms=1)
    wide.centers[0] = np.array([0.0, 0.0, 0.0])
    wide.radii[0] = 1.5
    with pytest.raises(bo.DomainError):
        bo.div_inverse(wide, U, pts[:1, 0, 0], QUAD, check_mean=(pts, dx**3))


def test_mode_path_matches_direct(U):
    gm = lambda r, z: np.exp(-((r - 0.4) ** 2 + z**2) / 0.02) * (1 - 0 * r)
    r = np.array([0.35, 0.45])
    z = np.array([0.0])
    hm = bo.div_inverse_mode(gm, 0, U, r, z, bo.QuadratureSpec(n_mu=12, n_phi=24, n_rho=12, n_u=16))
    # m = 0 source of nonzero mean is fine for comparing the two quadratures
    pts = np.array([[ri, 0.0, 0.0] for ri in r])
    hd = bo.direct_div_inverse(bo.mode_source(gm, 0), U, pts, n_mu=12, n_phi=24, n_u=32)
    assert np.allclose(hm[:, :, 0].T, hd, rtol=0.05, atol=0.02 * np.abs(hd).max())


def test_basis_combo_linear(U):
    B = bo.BumpGradientBasis.draw(U, np.random.default_rng(5), n_centres=2)
    c = np.random.default_rng(6).normal(size=B.size)
    p = np.random.default_rng(7).uniform(-0.5, 0.5, (10, 3))
    assert np.allclose(B.combo(c)(p), B(p) @ c)


@pytest.fixture(scope="module")
def packet_slice():
    prof = bg.make_profile(0.5, 1.5)
    return wp.WavePacket(prof, 32).slice(0.0, n=1024)


def test_divfree_angular(packet_slice):
    z = np.linspace(-3, 3, 241)
    d = bo.divfree_initial_data(packet_slice, 1.0, z)
    div = d.divergence()
    ref = np.abs(d.b0[2]).max() * d.m / d.r.min()
    assert np.abs(div[2:-2, 2:-2]).max() < 5e-2 * ref
    # correction lives where chi' does
    out = np.abs(z) < 1
    assert np.all(d.correction[:, :, out] == 0)
    assert d.pairing_defect() < 0.1


def test_divfree_zero_bz(packet_slice):
    s = packet_slice
    zero = type(s)(**{**s.__dict__, "bz": np.zeros_like(s.bz)})
    d = bo.divfree_initial_data(zero, 1.0, np.linspace(-3, 3, 61))
    assert np.all(d.correction == 0)
    with pytest.raises(ValueError):
        bo.divfree_initial_data(s, 1.0, np.linspace(-3, 3, 61), method="nope")
