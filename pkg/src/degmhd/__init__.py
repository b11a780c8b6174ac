"""Numerical experiments for degenerate E-MHD / Hall-MHD instability around f(r) d_theta."""

from . import background, bichar, bogovskii, cylgrid, linsolver, modeops, util, wavepacket

__all__ = ["background", "bichar", "bogovskii", "cylgrid", "linsolver", "modeops", "util", "wavepacket"]
__version__ = "0.1.0"
