import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degmhd import cylgrid as cg


@pytest.fixture
def grid():
    return cg.RZGrid(2.0, 64, 1.0, 33)


def _field(grid, ur, uth, uz):
    R, Z = grid.mesh()
    return cg.AxiVectorField(grid, ur(R, Z), uth(R, Z), uz(R, Z))


def zero(R, Z):
    return np.zeros_like(R)


def one(R, Z):
    return np.ones_like(R)


def test_grid_validation():
    with pytest.raises(ValueError):
        cg.RZGrid(1.0, 2, 1.0, 8)
    with pytest.raises(ValueError):
        cg.RZGrid(1.0, 8, 1.0, 3)
    with pytest.raises(ValueError):
        cg.RGrid(-1.0, 8)


def test_weights_integrate_r(grid):
    # int_0^R int_-Z^Z r dr dz = R^2 Z
    assert np.isclose(grid.weights.sum(), grid.r_max**2 * grid.z_max, rtol=1e-12)


def test_curl_of_rotation(grid):
    # d_theta is rigid rotation; its curl is 2 d_z
    U = _field(grid, zero, one, zero)
    W = cg.curl_axi(U)
    assert np.allclose(W.ur, 0, atol=1e-12)
    assert np.allclose(W.uth, 0, atol=1e-12)
    assert np.allclose(W.uz, 2, atol=1e-10)


def test_div_radial_and_rotation(grid):
    d1 = cg.div_axi(_field(grid, lambda R, Z: R, zero, zero))
    d2 = cg.div_axi(_field(grid, zero, one, zero))
    assert np.allclose(d1.values, 2, atol=1e-10)
    assert np.allclose(d2.values, 0, atol=1e-12)


def test_scalar_operators_on_r2(grid):
    R, Z = grid.mesh()
    f = cg.ScalarField(grid, R**2)
    g = cg.grad_cyl(f)
    assert np.allclose(g.ur, 2 * R, atol=1e-10)
    lap = cg.laplacian_cyl(f).values
    # interior rows; the outer boundary uses one-sided stencils
    assert np.allclose(lap[:-2], 4, atol=1e-8)


def test_material_derivative_rotation(grid):
    R, Z = grid.mesh()
    U = _field(grid, zero, one, zero)
    out = cg.material_derivative(U, U)
    # d_theta . grad d_theta = -r d_r (centripetal)
    ur = out.ur
    assert np.allclose(ur[:-2], -R[:-2], atol=1e-8)


def test_mode_field_norm():
    g = cg.RGrid(1.0, 50)
    a = np.cos(g.r)[None, :]
    mf = cg.ModeField.on_grid(8, a, g)
    expect = np.sqrt(np.pi * np.sum(a[0] ** 2 * g.weights))
    assert np.isclose(cg.sobolev_norm(mf, 0, 2), expect, rtol=1e-10)


def test_norm_argument_errors(grid):
    f = cg.ScalarField(grid, np.ones(grid.shape))
    with pytest.raises(ValueError):
        cg.sobolev_norm(f, -1, 2)
    with pytest.raises(ValueError):
        cg.sobolev_norm(f, 0, 0.5)


def test_inner_product_consistent(grid):
    R, Z = grid.mesh()
    rng = np.random.default_rng(0)
    a = cg.AxiVectorField(grid, *(rng.standard_normal(grid.shape) for _ in range(3)))
    b = cg.AxiVectorField(grid, *(rng.standard_normal(grid.shape) for _ in range(3)))
    assert np.isclose(cg.inner_product(a, b), cg.inner_product(b, a))
    a_phys = cg.AxiVectorField(grid, a.ur, np.zeros(grid.shape), a.uz)
    assert np.isclose(cg.inner_product(a_phys, a_phys), cg.sobolev_norm(a_phys, 0, 2) ** 2, rtol=1e-10)


def test_l1_over_l2_shrinks_with_support():
    g = cg.RGrid(1.0, 400)
    ratios = []
    for w in (0.4, 0.2, 0.1):
        a = np.where(np.abs(g.r - 0.5) < w / 2, 1.0, 0.0)
        f = cg.ScalarField(g, a)
        ratios.append(cg.sobolev_norm(f, 0, 1) / cg.sobolev_norm(f, 0, 2))
    assert ratios[0] > ratios[1] > ratios[2]


def test_save_load_roundtrip(tmp_path, grid):
    rng = np.random.default_rng(1)
    U = cg.AxiVectorField(grid, *(rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
                                   for _ in range(3)), m=3)
    p = tmp_path / "u.dgmf"
    cg.save_field(p, U)
    V = cg.load_field(p)
    assert V.m == 3 and V.grid == grid
    for a, b in zip((U.ur, U.uth, U.uz), (V.ur, V.uth, V.uz)):
        assert np.array_equal(a, b)
    bad = tmp_path / "bad"
    bad.write_bytes(b"nope")
    with pytest.raises(ValueError):
        cg.load_field(bad)


def test_export_csv(tmp_path):
    g = cg.RZGrid(1.0, 4, 1.0, 5)
    f = cg.ScalarField(g, np.arange(20.0).reshape(4, 5))
    p = tmp_path / "f.csv"
    cg.export_csv(p, f)
    rows = p.read_text().splitlines()
    assert rows[0] == "r,z,value" and len(rows) == 21
    assert float(rows[-1].split(",")[2]) == 19.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 1.0), st.floats(0.05, 0.3), st.floats(0.2, 0.8))
def test_hardy_gap_nonnegative(ell, w, c):
    g = cg.RGrid(2.0, 400)
    u = np.exp(-((g.r - c) / w) ** 2)
    gap, nrm = cg.hardy_gap(u, g, ell)
    assert gap >= -1e-6 * nrm
