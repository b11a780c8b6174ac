import numpy as np
import pytest

from degmhd import background as bg
from degmhd import cylgrid as cg


def test_profile_exact_on_inner_window():
    ell, r0 = 1 / 40, 1 / 20
    prof = bg.make_profile(ell, r0)
    r = np.linspace(r0 - ell / 2, r0 + ell, 101)
    assert np.allclose(prof.f(r), r - r0, atol=1e-14)
    assert np.allclose(prof.df(r), 1.0, atol=1e-12)
    assert prof.r1 == pytest.approx(r0 + ell)


@pytest.mark.parametrize("ell,r0", [(0.1, 0.1), (0.1, 2.5), (0.0, 1.0), (1.5, 3.0)])
def test_profile_rejects_bad_parameters(ell, r0):
    with pytest.raises(bg.ProfileError):
        bg.make_profile(ell, r0)


def test_profile_derivatives_match_fd():
    prof = bg.make_profile(0.5, 1.5)
    r = np.linspace(0.8, 2.6, 300)
    h = 1e-5
    fd1 = (prof.f(r + h) - prof.f(r - h)) / (2 * h)
    fd2 = (prof.df(r + h) - prof.df(r - h)) / (2 * h)
    assert np.allclose(prof.df(r), fd1, atol=1e-7)
    assert np.allclose(prof.d2f(r), fd2, atol=1e-5)
    assert np.allclose(prof.q(r), prof.d2f(r) + 3 * prof.df(r) / r)


def test_custom_profile_needs_samples():
    with pytest.raises(bg.ProfileError):
        bg.make_profile(0.5, 1.5, kind="custom")
    with pytest.raises(bg.ProfileError):
        bg.make_profile(0.5, 1.5, kind="mystery")


@pytest.fixture
def zgrid():
    return cg.RZGrid(1.0, 8, 2.0, 401)


def test_shock_time_values(zgrid):
    assert bg.shock_time(lambda r, z: -z, zgrid) == np.inf
    assert bg.shock_time(lambda r, z: z, zgrid) == pytest.approx(0.5)
    assert bg.shock_time(lambda r, z: 2 * z, zgrid) == pytest.approx(0.25)


def test_burgers_linear_patch(zgrid):
    # Pi0 = z gives Pi(t) = z / (1 - 2t)
    R, Z = zgrid.mesh()
    P = bg.burgers_point(lambda r, z: z, R, Z, 0.2, sup=10.0)   # bracket must contain the foot z / 0.6
    assert np.allclose(P, Z / 0.6, atol=1e-12)
    with pytest.raises(bg.ShockError):
        bg.evolve_burgers(bg.EmhdBackground(zgrid, lambda r, z: z), 0.5)
    with pytest.raises(ValueError):
        bg.burgers_point(lambda r, z: z, R, Z, 0.1)


def test_burgers_z_independent_data_is_frozen(zgrid):
    P0 = lambda r, z: np.sin(r) + 0 * z
    P = bg.evolve_burgers(bg.EmhdBackground(zgrid, P0), 0.3)
    R, Z = zgrid.mesh()
    assert np.allclose(P, np.sin(R), atol=1e-12)


def test_burgers_sampled_matches_exact():
    grid = cg.RZGrid(1.0, 6, 4.0, 801)
    P0 = lambda r, z: np.exp(-z**2) * (1 + 0 * r)
    b = bg.EmhdBackground(grid, P0)
    exact = bg.evolve_burgers(b, 0.2)
    sampled = bg.evolve_burgers(bg.EmhdBackground(grid, b.initial_samples()), 0.2)
    assert np.abs(exact - sampled)[:, 50:-50].max() < 1e-4


def test_window_lemma():
    prof = bg.make_profile(0.5, 1.5)
    grid = cg.RZGrid(3.5, 16, 30.0, 601)
    assert bg.lemma_window_defect(prof, grid, 4 * prof.ell) < 1e-12


def test_finite_speed():
    grid = cg.RZGrid(1.0, 4, 4.0, 161)
    a = lambda r, z: np.exp(-z**2) + 0 * r
    b = lambda r, z: np.where(z > 3.0, 0.0, np.exp(-z**2)) + 0 * r
    assert bg.finite_speed_check(a, b, 0.1, grid)


def test_taylor_residual_quadratic():
    # Pi0 = z: Pi(t) - Pi0 - 2t Pi0 Pi0' = z(4t^2 + ...) so residual / t^2 -> 4 ||z||
    grid = cg.RZGrid(1.0, 8, 1.0, 201)
    R, Z = grid.mesh()
    t = 1e-3
    Pt = Z / (1 - 2 * t)
    res = bg.taylor_residual(Pt, Z, grid, t)
    ref = 4 * cg.sobolev_norm(cg.ScalarField(grid, Z), 0, 2)
    assert res == pytest.approx(ref, rel=1e-2)


def test_stream_solve_manufactured():
    grid = cg.RZGrid(1.0, 48, 1.0, 49)
    R, Z = grid.mesh()
    # Phi = (1 - r^2) cos(pi z / 2): -slashed-Lap Phi
    phi = (1 - R**2) * np.cos(np.pi * Z / 2)
    om = (8 + (np.pi / 2) ** 2 * (1 - R**2)) * np.cos(np.pi * Z / 2)
    sol = bg.stream_solve(om, grid)
    assert np.abs(sol - phi).max() < 5e-3
    with pytest.raises(ValueError):
        bg.stream_solve(om, grid, m=1)


def test_hall_zero_data_stays_zero():
    grid = cg.RZGrid(1.0, 12, 1.0, 13)
    z = np.zeros(grid.shape)
    h = bg.HallBackground(grid, z.copy(), z.copy(), nu=0.01)
    tr = bg.evolve_hall(h, 0.01, 0.05, norm_orders=(1,))
    assert np.all(tr.Pi[-1] == 0) and np.all(tr.Omega[-1] == 0)


def test_hall_step_restrictions():
    grid = cg.RZGrid(1.0, 12, 1.0, 13)
    R, Z = grid.mesh()
    h = bg.HallBackground(grid, np.zeros(grid.shape), 10 * np.ones(grid.shape))
    with pytest.raises(bg.StepError):
        bg.hall_step(h, 1.0)
    h2 = bg.HallBackground(grid, np.zeros(grid.shape), np.zeros(grid.shape), nu=10.0)
    with pytest.raises(bg.StepError):
        bg.hall_step(h2, 0.01)


def test_apriori_monitor():
    assert bg.apriori_monitor([1.0, 1.0, 1.0]) == {"ratio": 1.0, "flag": False}
    assert bg.apriori_monitor([1.0, 20.0], limit=10)["flag"]
    assert bg.apriori_monitor([0.0, 0.0])["ratio"] == 0.0
