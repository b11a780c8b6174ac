"""Bicharacteristics of B0.xi |xi| for the shear field y chi(z) e_x:
|xi| grows like exp(lam t) and rays stay in the strip |z| <= 2."""
from degmhd import bichar as bc

lams = [16, 32, 64, 128]
slopes = []
for lam in lams:
    tr = bc.shear_ray(lam, z0=0.5, xiz0=1.0)
    rep = bc.confinement_check(tr, lam)
    slopes.append(tr.xi_slope((1 / lam, 4 / lam)))
    print(f"lam={lam:4d} slope/lam={slopes[-1] / lam:.4f}  H drift={tr.h_drift():.1e}  "
          f"z_max={rep.z_max:.3f}  max|xi_z|/|xi|={rep.xiz_ratio_max:.2e}")
k, R2 = bc.rate_linearity(lams, slopes)
print(f"slope = {k:.4f} lam  (R^2 = {R2:.5f})")
