import numpy as np
import pytest

from degmhd import background as bg
from degmhd import bichar as bc


@pytest.fixture(scope="module")
def prof():
    return bg.make_profile(0.5, 1.5)


def test_symbol_value_at_start():
    lam = 16.0
    p = bc.hamiltonian(bc.shear_field(), [0, 1, 0], [lam, -lam, 0])
    assert p == pytest.approx(np.sqrt(2) * lam**2)


@pytest.mark.parametrize("kind", ["shear", "axisym", "constant"])
def test_symbol_gradients_match_fd(kind, prof):
    field = {"shear": bc.shear_field(), "axisym": bc.axisym_field(prof),
             "constant": bc.constant_field([0.3, -0.2, 0.5])}[kind]
    rng = np.random.default_rng(0)
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        if kind == "axisym":
            rr, th = rng.uniform(1.6, 2.3), rng.uniform(0, 2 * np.pi)
            X = np.array([rr * np.cos(th), rr * np.sin(th), rng.uniform(-1.8, 1.8)])
        else:
            X = rng.uniform(-1.8, 1.8, 3)
        Xi = rng.standard_normal(3)
        _, gX, gXi = bc.symbol(field, X, Xi)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fx = (bc.hamiltonian(field, X + e, Xi) - bc.hamiltonian(field, X - e, Xi)) / (2 * h)
            fxi = (bc.hamiltonian(field, X, Xi + e) - bc.hamiltonian(field, X, Xi - e)) / (2 * h)
            worst = max(worst, abs(fx - gX[k]), abs(fxi - gXi[k]))
    assert worst < 1e-6


def test_symbol_homogeneous_degree_two():
    f = bc.shear_field()
    X, Xi = [0.2, 0.7, 0.3], np.array([1.0, -2.0, 0.5])
    assert bc.hamiltonian(f, X, 3 * Xi) == pytest.approx(9 * bc.hamiltonian(f, X, Xi))


def test_zero_frequency_rejected():
    with pytest.raises(bc.RayDomainError):
        bc.symbol(bc.shear_field(), [0, 1, 0], [0, 0, 0])
    with pytest.raises(bc.RayDomainError):
        bc.RayState([0, 1, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        bc.trace_ray(bc.shear_field(), bc.RayState([0, 1, 0], [1, 0, 0]), 1.0, tol=0)


def test_constant_field_straight_rays():
    f = bc.constant_field([1.0, 0.0, 0.0])
    tr = bc.trace_ray(f, bc.RayState([0, 0, 0], [1.0, 1.0, 0]), 1.0)
    assert np.allclose(tr.Xi, tr.Xi[0], atol=1e-12)
    v = np.diff(tr.X, axis=0) / np.diff(tr.t)[:, None]
    assert np.allclose(v, v[0], rtol=1e-6)


def test_shear_ray_exponential_growth():
    lam = 32
    tr = bc.shear_ray(lam)
    assert tr.status == "ok"
    assert tr.h_drift() < 1e-7
    assert tr.integral_drift() < 1e-9
    # invariant plane z = 0 (chi'(0) = 0 and Xi_z = 0)
    assert np.all(tr.X[:, 2] == 0) and np.all(tr.Xi[:, 2] == 0)
    assert tr.xi_slope((1 / lam, 4 / lam)) == pytest.approx(lam, rel=0.02)


def test_shear_without_cutoff_agrees_on_plane():
    a = bc.shear_ray(16, use_chi=True)
    b = bc.shear_ray(16, use_chi=False)
    assert np.allclose(a.Xi, b.Xi, rtol=1e-6)


def test_confinement_and_linearity():
    lams = [16, 32, 64]
    Cs, slopes = [], []
    for lam in lams:
        tr = bc.shear_ray(lam, z0=0.5, xiz0=1.0)
        rep = bc.confinement_check(tr, lam)
        assert rep.ok
        Cs.append(rep.xiz_ratio_max)
        slopes.append(tr.xi_slope((1 / lam, 4 / lam)))
    assert Cs[2] < Cs[0]
    k, R2 = bc.rate_linearity(lams, slopes)
    assert R2 >= 0.98 and k == pytest.approx(1.0, rel=0.05)


def test_axisym_angular_momentum_conserved(prof):
    tr = bc.axisym_ray(prof, 32)
    assert tr.status == "ok"
    assert tr.integral_drift() < 1e-7
    assert tr.h_drift() < 1e-6


def test_rate_linearity_exact():
    k, R2 = bc.rate_linearity([1, 2, 3], [2, 4, 6])
    assert k == pytest.approx(2) and R2 == pytest.approx(1)
