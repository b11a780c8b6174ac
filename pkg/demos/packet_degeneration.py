"""Mixed L^2_theta L^p norms of the approximate packet: decay like
exp(-(1/p - 1/2) lam t) for p < 2, flat for p = 2."""
import numpy as np

from degmhd import background as bg
from degmhd import wavepacket as wp

prof = bg.make_profile(0.5, 1.5)
for lam in (32, 64):
    pk = wp.WavePacket(prof, lam)
    ts = np.linspace(0, 4.0 / lam, 9)
    for p in (1.0, 4.0 / 3.0, 2.0):
        fit = wp.degeneration_rate(pk, p, ts)
        print(f"lam={lam:3d} p={p:.3f}  slope/lam={fit.slope / lam:+.4f}  kappa={fit.kappa:.3f}")
    s = pk.slice(ts[-1])
    print(f"          ||b||_L2={s.l2():.4f}  ||b||_H1={s.h1():.4g}  err_L2={s.err_l2():.3g}")
