import warnings

import numpy as np
import pytest

from degmhd import background as bg
from degmhd import wavepacket as wp

ELL, R0 = 0.5, 1.5


@pytest.fixture(scope="module")
def prof():
    return bg.make_profile(ELL, R0)


@pytest.fixture(scope="module")
def chart(prof):
    return wp.build_eta(prof)


@pytest.fixture(scope="module")
def packet(prof, chart):
    return wp.WavePacket(prof, 32, chart=chart)


def test_eta_closed_form(prof, chart):
    # f = r - r0 near r0 gives eta = log((r - r0) / ell)
    r = np.linspace(R0 + 1e-3, R0 + ELL, 50)
    assert np.allclose(chart.eta(r), np.log((r - R0) / ELL), atol=1e-10)
    assert abs(float(chart.eta(prof.r1))) < 1e-12
    eta = np.linspace(-6, 0, 40)
    assert np.allclose(chart.eta(chart.r(eta)), eta, atol=1e-9)


def test_phase_time_derivative_and_hj(chart):
    eta = np.linspace(-5, -0.2, 30)
    h = 1e-4
    dtau = (wp.phase(chart, 1 + h, eta) - wp.phase(chart, 1 - h, eta)) / (2 * h)
    assert np.allclose(dtau, 1.0, atol=1e-9)
    assert wp.hj_residual(chart, eta, tau=0.7) < 1e-6


def test_envelope_exact_matches_characteristics(chart):
    h0 = wp.InitialEnvelope.bump(-1.0, 0.0)
    sl = wp.solve_envelope(h0, chart, 2.0, d_eta=0.02)
    k = len(sl.taus) - 1
    Y = sl.Y[k][10:-10]
    h = wp.envelope_exact(chart, h0, sl.taus[k], Y)[0]
    assert np.abs(h - sl.H[k][10:-10]).max() < 1e-6 * np.abs(h0.value(np.linspace(-1, 0, 101))).max()


def test_envelope_translates_where_c_is_one(chart):
    # deep in the degenerate region c = 1 - O(f^2): pure translation at unit speed
    h0 = wp.InitialEnvelope.bump(-12.0, -11.0)
    eta = np.linspace(-14, -12, 200)
    h = wp.envelope_exact(chart, h0, 1.0, eta)[0]
    assert np.allclose(h, h0.value(eta + 1.0), atol=1e-9)


def test_bump_normalised_and_from_samples_zero():
    h0 = wp.InitialEnvelope.bump(-2.0, -1.0)
    assert h0.l2() == pytest.approx(1.0, rel=1e-6)
    z = wp.InitialEnvelope.from_samples(np.linspace(0, 1, 11), np.zeros(11))
    assert np.all(z.value(np.linspace(0, 1, 5)) == 0)


def test_g0_weighted_identity(packet, chart, prof):
    # ||g0||^2 = 2 pi int f h0^2 r dr / r ... = 2 pi int f^2 h0^2 deta
    a, b = packet.h0.support
    eta = np.linspace(a, b, 20001)
    f = prof.f(chart.r(eta))
    ref = 2 * np.pi * np.trapezoid(f**2 * packet.h0.value(eta) ** 2, eta)
    assert packet.g0_norm(0) ** 2 == pytest.approx(ref, rel=2e-3)


def test_psi_over_b_scales_inverse_lambda(prof, chart):
    ratios = []
    for lam in (32, 64):
        s = wp.WavePacket(prof, lam, chart=chart).slice(0.0)
        ratios.append(s.psi_l2() / s.l2())
    assert ratios[0] / ratios[1] == pytest.approx(2.0, rel=0.05)


def test_zero_envelope_gives_zero_fields(prof, chart):
    h0 = wp.InitialEnvelope.from_samples(np.linspace(-1, 0, 21), np.zeros(21))
    s = wp.WavePacket(prof, 32, h0=h0, chart=chart).slice(0.01, eta=np.linspace(-1, 0, 50))
    assert np.all(s.psi == 0) and np.all(s.bz == 0)


def test_small_lambda_warns(prof, chart):
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        wp.WavePacket(prof, 8, chart=chart)
    assert any("poorly localized" in str(x.message) for x in w)


def test_degeneration_rate_arguments_and_l2(packet):
    with pytest.raises(ValueError):
        wp.degeneration_rate(packet, 2, [0, 0.1, 0.2])
    fit = wp.degeneration_rate(packet, 2, np.linspace(0.1, 0.3, 4))
    assert abs(fit.slope) < 0.05 * packet.lam
    assert np.isnan(fit.kappa)


def test_degeneration_rate_p1(packet):
    fit = wp.degeneration_rate(packet, 1, np.linspace(0.1, 0.3, 5))
    # L^1 norm decays like exp(-lam t / 2)
    assert fit.kappa == pytest.approx(1.0, abs=0.1)


def test_rescale_packet(packet):
    q = wp.rescale_packet(packet, 2.0)
    a = q.slice(0.05)
    b = packet.slice(0.1)
    assert a.tau == pytest.approx(b.tau)
    with pytest.raises(ValueError):
        wp.rescale_packet(packet, 0.0)


def test_error_bounded_and_fd_oracle(packet):
    rep = wp.packet_error(packet, 0.1)
    assert np.isfinite(rep.ratio) and rep.ratio < 10
    err_fd, s0 = wp.fd_error_oracle(packet, 0.1, n=8192)
    inner = slice(200, -200)
    e_an = s0.err_bz[inner]
    d = np.linalg.norm(err_fd[inner] - e_an) / np.linalg.norm(e_an)
    assert d < 0.05


def test_hall_companion(packet):
    _, rep = wp.hall_companion(packet, 0.05, nu=0.0)
    assert rep.identity_residual < 0.05
    assert rep.smoothing < rep.b_l2
