import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degmhd import background as bg
from degmhd import linsolver as ls
from degmhd import wavepacket as wp
from degmhd.acceptance import _linear_run

ELL, R0 = 0.5, 1.5


@pytest.fixture(scope="module")
def prof():
    return bg.make_profile(ELL, R0)


@pytest.fixture(scope="module")
def packet(prof):
    return wp.WavePacket(prof, 32)


@pytest.fixture(scope="module")
def setup(prof):
    return ls.make_setup(prof, 32, 1.0)


def test_default_ppw_grows():
    assert ls.default_ppw(32, 1) == 40
    assert ls.default_ppw(1024, 4) > ls.default_ppw(256, 4)


def test_zero_profile_freezes_data(prof, setup):
    frozen = ls.ModeSetup(prof, setup.lam, setup.mesh)
    frozen.f = np.zeros_like(frozen.f)
    frozen.q = np.zeros_like(frozen.q)
    rng = np.random.default_rng(0)
    bz = rng.standard_normal(setup.mesh.n) + 0j
    psi = rng.standard_normal(setup.mesh.n) + 0j
    s = ls.step_emhd(frozen, ls.LinStateE(32, bz.copy(), psi.copy()), 1e-3)
    assert np.array_equal(s.bz, bz) and np.array_equal(s.psi, psi)
    h = ls.LinStateH(32, 0 * bz, 0 * bz, bz.copy(), psi.copy())
    h1 = ls.step_hall(frozen, h, 1e-3)
    assert np.array_equal(h1.bz, bz) and np.all(h1.uz == 0)


def test_step_restrictions(setup):
    n = setup.mesh.n
    z = np.zeros(n, complex)
    with pytest.raises(ls.StepError):
        ls.step_emhd(setup, ls.LinStateE(32, z, z), 10 * setup.stable_dt())
    h = ls.LinStateH(32, z, z, z, z, nu=1e6)
    with pytest.raises(ls.StepError):
        ls.step_hall(setup, h, 0.5 * setup.stable_dt())


def test_nonfinite_data_diverges(setup):
    n = setup.mesh.n
    bz = np.zeros(n, complex)
    bz[n // 2] = np.nan
    with pytest.raises(ls.DivergenceError):
        ls.step_emhd(setup, ls.LinStateE(32, bz, np.zeros(n, complex)), 0.5 * setup.stable_dt())


def test_discrete_div_free(setup):
    psi = np.random.default_rng(1).standard_normal(setup.mesh.n) + 0j
    assert np.abs(ls.discrete_div(setup, psi)).max() < 1e-8 * np.abs(psi).max() * setup.lam / setup.r.min()


def test_self_pairing_is_norm_squared(setup):
    rng = np.random.default_rng(2)
    psi = rng.standard_normal(setup.mesh.n) + 1j * rng.standard_normal(setup.mesh.n)
    bz = rng.standard_normal(setup.mesh.n) + 0j
    assert ls.pairing_xy(setup, psi, bz, psi, bz) == pytest.approx(ls.hs_norm(setup, psi, bz, 0) ** 2, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 2))
def test_duality_cauchy_schwarz(seed, s):
    prof = bg.make_profile(ELL, R0)
    setup = ls.make_setup(prof, 32, 0.5, n=400)
    rng = np.random.default_rng(seed)
    a = [rng.standard_normal(400) + 1j * rng.standard_normal(400) for _ in range(4)]
    pair = abs(ls.pairing_xy(setup, a[0], a[1], a[2], a[3]))
    assert pair <= ls.hs_norm(setup, a[0], a[1], s) * ls.hs_dual_norm(setup, a[2], a[3], s) * (1 + 1e-10)


def test_norm_errors(setup):
    z = np.zeros(setup.mesh.n, complex)
    with pytest.raises(ValueError):
        ls.hs_norm(setup, z, z, -1)
    with pytest.raises(NotImplementedError):
        ls.direct_norm(setup, z, z, 1, 4)
    with pytest.raises(ValueError):
        ls.run_linear(wp.WavePacket(setup.prof, 32), 0.01, system="mhd")


def test_packet_seeding_and_energy(packet, setup):
    psi, bz, _ = ls.packet_on_mesh(packet, setup, 0.0)
    s = packet.slice(0.0)
    assert ls.hs_norm(setup, psi, bz, 0) == pytest.approx(s.l2(), rel=0.02)
    st_ = ls.LinStateE(32, bz, psi)
    assert ls.energy_emhd(setup, st_) == pytest.approx(0.5 * ls.hs_norm(setup, psi, bz, 0) ** 2, rel=1e-12)


@pytest.fixture(scope="module")
def run32():
    return _linear_run(32, "emhd")


def test_certificates_hold(run32):
    for (s, p) in run32.trace.dual:
        c = ls.growth_certificate(run32, s, p)
        assert c.holds and c.positive
    c1 = ls.growth_certificate(run32, 1, 2)
    c0 = ls.growth_certificate(run32, 0, 2)
    assert c1.rate > c0.rate
    assert c1.rate == pytest.approx(32, rel=0.1)
    assert run32.audit["rel_mismatch"] < 1e-6


def test_rate_doubles_with_lambda(run32):
    r64 = _linear_run(64, "emhd")
    k32 = ls.growth_certificate(run32, 1, 2).rate
    k64 = ls.growth_certificate(r64, 1, 2).rate
    assert k64 / k32 == pytest.approx(2.0, rel=0.05)


def test_pairing_trace_helpers(run32):
    tr = run32.trace
    T, thr = tr.lower_bound_window()
    assert T > 0 and thr > 0
    assert tr.budget_constant() < 1.0
    assert max(tr.wall) < 1e-4
    with pytest.raises(KeyError):
        ls.growth_certificate(run32, 3, 2)


def test_bruteforce_dr_bound_grows_like_lambda(packet):
    ts = np.linspace(0.0, 2.0 / packet.lam, 5)
    slope, vals = ls.dr_bound_fit(packet, ts)
    assert slope == pytest.approx(packet.lam, rel=0.1)


def test_default_dt_respects_viscous_limit(packet):
    setup = ls.make_setup(packet.prof, 32, 0.5, n=300)
    nu = 1e-3
    res = ls.run_linear(packet, 0.5 / 32, system="hall", nu=nu, n_out=2, setup=setup,
                        cert=((0, 2),), hs_orders=(0,), audit_steps=4)
    assert nu * res.audit["dt"] <= 0.25 * np.min(np.diff(setup.r)) ** 2
    assert np.isfinite(res.trace.b_l2[-1])
