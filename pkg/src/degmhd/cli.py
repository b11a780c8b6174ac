"""Command-line experiment runner.

Subcommands: background, wavepacket, bogovskii-test, linear-growth, bichar,
suite (the acceptance battery), run (a config file of sweep points) and plot.

Exit codes: 0 pass, 1 configuration error, 2 numerical failure,
3 acceptance failure.  DEGMHD_THREADS caps the worker pool.
"""

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid configuration; message starts with the offending key path."""


class CsvError(ValueError):
    pass


# ------------------------------------------------------------------ schema

def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


# experiment -> key -> (type, default, validator)
SCHEMA = {
    "background": {
        "profile": (str, "linear-capped", lambda v: v == "linear-capped"),
        "ell": (float, 0.5, _pos), "r0": (float, 1.5, _pos), "nu": (float, 0.0, _nonneg),
        "nr": (int, 48, lambda v: v >= 8), "nz": (int, 96, lambda v: v >= 8),
        "T": (float, 0.0625, _pos), "dt": (float, 0.0, _nonneg), "n_out": (int, 8, _pos),
    },
    "wavepacket": {
        "lambda": (int, 32, _pos), "ell": (float, 0.5, _pos), "r0": (float, 1.5, _pos),
        "p": (float, 1.0, lambda v: v >= 1), "s": (int, 1, _nonneg),
        "tmax": (float, 0.0, _nonneg), "n_out": (int, 9, lambda v: v >= 2),
    },
    "bogovskii-test": {
        "L": (float, 1.0, _pos), "n": (int, 16, lambda v: v >= 6), "mode": (int, 0, _nonneg),
        "n_sources": (int, 10, _pos),
    },
    "linear-growth": {
        "system": (str, "emhd", lambda v: v in ("emhd", "hall")),
        "lambda": (int, 32, _pos), "ell": (float, 0.5, _pos), "r0": (float, 1.5, _pos),
        "nu": (float, 0.0, _nonneg), "s": (int, 1, _nonneg), "p": (float, 2.0, lambda v: v >= 1),
        "tmax": (float, 0.0, _nonneg), "nr": (int, 0, _nonneg), "n_out": (int, 24, _pos),
    },
    "bichar": {
        "field": (str, "shear", lambda v: v in ("shear", "axisym")),
        "lambda": (float, 32.0, _pos), "z0": (float, 0.0, lambda v: True),
        "xiz0": (float, 0.0, lambda v: True), "T": (float, 0.0, _nonneg),
        "tol": (float, 1e-9, _pos), "ell": (float, 0.5, _pos), "r0": (float, 1.5, _pos),
        "n_out": (int, 200, lambda v: v >= 2),
    },
}
RUN_KEYS = {"seed": (int, 0, _nonneg), "out": (str, "results", lambda v: bool(v))}


def _convert(path, typ, raw, check):
    try:
        if typ is float:
            val = float("inf") if str(raw).lower() in ("inf", "infinity") else float(raw)
        else:
            val = typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: cannot parse {raw!r} as {typ.__name__}") from None
    if typ is float and not math.isfinite(val) and not path.endswith(".p"):
        raise ConfigError(f"{path}: must be finite")
    if not check(val):
        raise ConfigError(f"{path}: value {raw!r} out of range")
    return val


def validate(experiment, params, prefix=None):
    """Typed parameters with defaults filled in; unknown keys are rejected."""
    prefix = prefix or experiment
    if experiment not in SCHEMA:
        raise ConfigError(f"{prefix}: unknown experiment {experiment!r}")
    schema = SCHEMA[experiment]
    out = {}
    for k, v in params.items():
        if k not in schema:
            raise ConfigError(f"{prefix}.{k}: unknown key")
        typ, _, check = schema[k]
        out[k] = _convert(f"{prefix}.{k}", typ, v, check)
    for k, (_, default, _) in schema.items():
        out.setdefault(k, default)
    return out


@dataclass
class SweepPoint:
    experiment: str
    label: str
    params: dict


@dataclass
class ExperimentConfig:
    seed: int = 0
    out: str = "results"
    points: list = field(default_factory=list)

    def serialize(self):
        lines = ["[run]", f"seed = {self.seed}", f"out = {self.out}"]
        for p in self.points:
            lines.append("")
            lines.append(f"[{p.experiment} {p.label}]" if p.label else f"[{p.experiment}]")
            for k in sorted(p.params):
                lines.append(f"{k} = {_fmt_value(p.params[k])}")
        return "\n".join(lines) + "\n"


def _fmt_value(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_config(text):
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"<config>: {exc}") from None
    cfg = ExperimentConfig()
    seen = set()
    for sec in cp.sections():
        items = dict(cp.items(sec))
        if sec == "run":
            for k, v in items.items():
                if k not in RUN_KEYS:
                    raise ConfigError(f"run.{k}: unknown key")
                typ, _, check = RUN_KEYS[k]
                setattr(cfg, k, _convert(f"run.{k}", typ, v, check))
            continue
        exp, _, label = sec.partition(" ")
        label = label.strip()
        if (exp, label) in seen:
            raise ConfigError(f"{sec}: duplicate section")
        seen.add((exp, label))
        cfg.points.append(SweepPoint(exp, label, validate(exp, items, prefix=sec)))
    return cfg


# ---------------------------------------------------------------- csv/svg

def write_csv(path, header, rows):
    """Deterministic CSV: fixed 12 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path):
    """Columns of a numeric CSV as a dict of arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvError(f"{path}: line 1: empty file")
    header = rows[0]
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvError(f"{path}: line {i}: expected {len(header)} fields, got {len(row)}")
        try:
            data.append([float(v) for v in row])
        except ValueError:
            raise CsvError(f"{path}: line {i}: non-numeric value") from None
    if not data:
        raise CsvError(f"{path}: line 2: no data rows")
    arr = np.array(data)
    return {h: arr[:, k] for k, h in enumerate(header)}


def plot(csv_path, kind="semilog", x="t", y=None, out=None, width=640, height=420):
    """Hand-written SVG line plot with the least-squares slope of each series.

    kind: "semilog" (log y against x) or "loglog".  Returns (svg text, slopes).
    """
    cols = read_csv(csv_path)
    if x not in cols:
        raise CsvError(f"{csv_path}: line 1: no column {x!r}")
    ys = y or [c for c in cols if c != x]
    if isinstance(ys, str):
        ys = [ys]
    X = cols[x]
    if kind == "loglog":
        X = np.log10(np.where(X > 0, X, np.nan))
    elif kind != "semilog":
        raise ValueError(f"unknown plot kind {kind!r}")
    series, slopes = [], {}
    for name in ys:
        if name not in cols:
            raise CsvError(f"{csv_path}: line 1: no column {name!r}")
        Y = np.log10(np.where(cols[name] > 0, cols[name], np.nan))
        ok = np.isfinite(X) & np.isfinite(Y)
        if ok.sum() < 2:
            raise CsvError(f"{csv_path}: series {name!r} has fewer than two positive points")
        slope = float(np.polyfit(X[ok], Y[ok], 1)[0]) * (np.log(10) if kind == "semilog" else 1.0)
        slopes[name] = slope
        series.append((name, X[ok], Y[ok]))
    svg = _svg(series, slopes, kind, x, width, height)
    if out is not None:
        Path(out).write_text(svg)
    return svg, slopes


_COLOURS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _svg(series, slopes, kind, xname, W, H):
    m = 60
    xs = np.concatenate([s[1] for s in series])
    ys = np.concatenate([s[2] for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    px = lambda v: m + (v - x0) / (x1 - x0) * (W - 2 * m)
    py = lambda v: H - m - (v - y0) / (y1 - y0) * (H - 2 * m)
    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">\n')
    out.write(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>\n')
    out.write(f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" fill="none" stroke="black"/>\n')
    xl = f"log10 {xname}" if kind == "loglog" else xname
    out.write(f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle">{xl}</text>\n')
    out.write(f'<text x="15" y="{H / 2}" transform="rotate(-90 15 {H / 2})" text-anchor="middle">log10 value</text>\n')
    for v, anchor in ((x0, "start"), (x1, "end")):
        out.write(f'<text x="{px(v):.1f}" y="{H - m + 15}" text-anchor="{anchor}">{v:.3g}</text>\n')
    for v in (y0, y1):
        out.write(f'<text x="{m - 5}" y="{py(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>\n')
    for k, (name, X, Y) in enumerate(series):
        col = _COLOURS[k % len(_COLOURS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(X, Y))
        out.write(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>\n')
        out.write(f'<text x="{m + 10}" y="{m + 18 + 16 * k}" fill="{col}">{name}: slope {slopes[name]:.2f}</text>\n')
    out.write("</svg>\n")
    return out.getvalue()


# ------------------------------------------------------------ experiments

def _threads():
    raw = os.environ.get("DEGMHD_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"DEGMHD_THREADS: cannot parse {raw!r}") from None
    if n < 1:
        raise ConfigError("DEGMHD_THREADS: must be >= 1")
    return n


def exp_background(p, out, seed=0):
    from . import cylgrid as cg
    from .background import HallBackground, grad_velocity_norm, hall_step, hm_norm_theta, make_profile, standard_data
    from .util import cutoff
    prof = make_profile(p["ell"], p["r0"], p["profile"])
    grid = cg.RZGrid(prof.r0 + 3 * prof.ell, p["nr"], 24 * prof.ell, p["nz"])
    R, Z = grid.mesh()
    P0 = standard_data(prof)(R, Z)
    hall = HallBackground(grid, np.zeros_like(P0), P0.copy(), nu=p["nu"])
    emhd = HallBackground(grid, np.zeros_like(P0), P0.copy(), nu=p["nu"], advect_velocity=False)
    h = min(grid.dr, grid.dz)
    dt = p["dt"] or 0.25 * h / max(2 * np.abs(P0).max(), 1e-12)
    n_steps = max(1, int(np.ceil(p["T"] / dt)))
    dt = p["T"] / n_steps
    every = max(1, n_steps // p["n_out"])
    chi = cutoff(grid.z, prof.ell)[None, :]
    w = 2 * np.pi * grid.weights
    rows = []

    def record():
        Vr, Vz = hall.velocity()
        rows.append([hall.t] + [hm_norm_theta(hall.Pi, grid, m) for m in (1, 2, 3, 4)]
                    + [float(np.abs(chi * cg.d_z(hall.Pi, grid)).max()),
                       float(max(np.abs(Vr).max(), np.abs(Vz).max())),
                       float(np.sqrt(np.sum((hall.Pi - emhd.Pi) ** 2 * R**2 * w)))])
    record()
    for k in range(n_steps):
        hall, emhd = hall_step(hall, dt), hall_step(emhd, dt)
        if (k + 1) % every == 0 or k + 1 == n_steps:
            record()
    path = write_csv(Path(out) / "background.csv",
                     ["t", "H1", "H2", "H3", "H4", "sup_dzPi_on_chi", "V_inf", "Pi_minus_Pie_L2"], rows)
    return {"csv": [str(path)], "checks": []}


def exp_wavepacket(p, out, seed=0):
    from .background import make_profile
    from .wavepacket import WavePacket
    lam = p["lambda"]
    pk = WavePacket(make_profile(p["ell"], p["r0"]), lam)
    tmax = p["tmax"] or 2 * np.log(lam) / lam
    rows = []
    for t in np.linspace(0, tmax, p["n_out"]):
        s = pk.slice(t)
        if p["s"] == 0:
            wsp = s.mixed(p["p"])
        elif p["s"] == 1:
            wsp = s.w1p(p["p"])
        else:
            raise ConfigError("wavepacket.s: only s in {0, 1} is measured on packets")
        lo, hi = pk.support(lam * t)
        rows.append([t, s.l2(), s.mixed(p["p"]), wsp, s.err_l2(), lo, hi])
    path = write_csv(Path(out) / f"wavepacket_lam{lam}.csv",
                     ["t", "norm_L2", "norm_mixed_p", "norm_W1p", "err_L2", "support_lo", "support_hi"], rows)
    return {"csv": [str(path)], "checks": []}


def exp_bogovskii(p, out, seed=0):
    from . import bogovskii as bg
    U = bg.BogovskiiDomain(L=p["L"])
    rng = np.random.default_rng(seed)
    basis = bg.BumpGradientBasis.draw(U, rng)
    pts, dx = bg.grid3(U, p["n"])
    quad = bg.QuadratureSpec(n_mu=8, n_phi=16, n_rho=8, n_u=24)
    Hb = np.swapaxes(bg.div_inverse(basis, U, pts, quad), -1, -2)
    Gb = basis(pts)
    inside = U.contains(pts)
    rows, checks = [], []
    support = bool(np.all(Hb[~inside] == 0))
    rows.append(["support_exact", float(support), 1.0, int(support)])
    worst_res, worst_grad = 0.0, 0.0
    for k in range(p["n_sources"]):
        a = rng.normal(size=basis.size)
        h, g = Hb @ a, Gb @ a
        src = bg.RandomDivSource(basis.centers, basis.radii, a.reshape(-1, 3))
        res = float(np.sqrt(np.mean((bg.fd_div(h, dx) - g) ** 2)))
        bound = 10 * dx**2 * src.c1_norm(pts)
        grad = bg.fd_grad_l2(h, dx) / np.sqrt(np.sum(g**2) * dx**3)
        rows.append([f"residual_{k}", res, bound, int(res <= bound)])
        rows.append([f"grad_ratio_{k}", grad, 10.0, int(grad <= 10.0)])
        worst_res = max(worst_res, res / bound)
        worst_grad = max(worst_grad, grad)
    if p["mode"] > 0:
        m = p["mode"]
        gm = lambda r, z: np.exp(-((r - 0.4 * U.L) ** 2 + z**2) / (0.15 * U.L) ** 2 * 4)
        r = np.array([0.3, 0.45]) * U.L
        z = np.array([-0.1, 0.1]) * U.L
        hm = bg.div_inverse_mode(gm, m, U, r, z, bg.QuadratureSpec(16, 32, 16, 32))
        Rr, Zz = np.meshgrid(r, z, indexing="ij")
        P3 = np.stack([Rr, np.zeros_like(Rr), Zz], -1)
        hd = np.moveaxis(bg.direct_div_inverse(bg.mode_source(gm, m), U, P3, 16, 32, 32), -1, 0)
        rel = float(np.abs(hm - hd).max() / np.abs(hd).max())
        rows.append([f"mode{m}_vs_direct", rel, 1e-3, int(rel <= 1e-3)])
    path = write_csv(Path(out) / "bogovskii.csv", ["check", "value", "bound", "passed"], rows)
    checks.append({"name": "bogovskii", "passed": all(r[3] for r in rows),
                   "worst_resid_over_bound": worst_res, "grad_constant": worst_grad})
    return {"csv": [str(path)], "checks": checks}


def exp_linear_growth(p, out, seed=0):
    from . import linsolver as ls
    from .background import make_profile
    from .wavepacket import WavePacket
    lam = p["lambda"]
    pk = WavePacket(make_profile(p["ell"], p["r0"]), lam)
    tmax = p["tmax"] or (4.0 / lam if p["system"] == "emhd" else np.log(lam) / lam)
    sp = (p["s"], np.inf if math.isinf(p["p"]) else p["p"])
    if sp[0] > 0 and sp[1] != 2:
        raise ConfigError("linear-growth.p: certificates with s >= 1 need p = 2")
    setup = None
    if p["nr"]:
        setup = ls.make_setup(pk.prof, lam, lam * tmax, n=p["nr"])
    res = ls.run_linear(pk, tmax, system=p["system"], nu=p["nu"], n_out=p["n_out"],
                        cert=tuple(dict.fromkeys([sp, (0, 2)])), setup=setup)
    tr = res.trace
    budget = tr.budget()
    rows = [[t, l2, w, pr, bu, e, lb] for t, l2, w, pr, bu, e, lb in
            zip(tr.t, tr.b_l2, tr.direct[sp], tr.pairing, budget, tr.err_l2, tr.dual[sp])]
    path = write_csv(Path(out) / f"linear_{p['system']}_lam{lam}_s{sp[0]}_p{p['p']:g}.csv",
                     ["t", "L2", "Wsp", "pairing", "pairing_budget", "err_packet", "certified_lower_bound"], rows)
    cert = ls.growth_certificate(res, *sp)
    checks = [{"name": "certificate", "passed": bool(cert.positive and cert.holds),
               "rate": cert.rate, "rate_over_lam": cert.rate / lam,
               "energy_audit": res.audit.get("rel_mismatch"), "K": tr.budget_constant()}]
    return {"csv": [str(path)], "checks": checks}


def exp_bichar(p, out, seed=0):
    from . import bichar as bc
    from .background import make_profile
    lam = p["lambda"]
    T = p["T"] or 4.0 / lam
    if p["field"] == "shear":
        tr = bc.shear_ray(lam, p["z0"], p["xiz0"], T=T, tol=p["tol"], n_out=p["n_out"])
    else:
        tr = bc.axisym_ray(make_profile(p["ell"], p["r0"]), lam, p["z0"], p["xiz0"], T=T, tol=p["tol"],
                           n_out=p["n_out"])
    rows = [[t, *X, *Xi, n, H] for t, X, Xi, n, H in zip(tr.t, tr.X, tr.Xi, tr.xi_norm, tr.H)]
    path = write_csv(Path(out) / f"bichar_{p['field']}_lam{lam:g}.csv",
                     ["t", "x", "y", "z", "xix", "xiy", "xiz", "|Xi|", "H"], rows)
    checks = [{"name": "hamiltonian", "passed": tr.h_drift() <= 10 * p["tol"] and tr.status == "ok",
               "H_drift": tr.h_drift(), "integral_drift": tr.integral_drift(),
               "slope_over_lam": tr.xi_slope() / lam}]
    return {"csv": [str(path)], "checks": checks}


EXPERIMENTS = {"background": exp_background, "wavepacket": exp_wavepacket, "bogovskii-test": exp_bogovskii,
               "linear-growth": exp_linear_growth, "bichar": exp_bichar}


def _run_point(args):
    pt, out, seed = args
    sub = Path(out) / (pt.experiment + (f"_{pt.label}" if pt.label else ""))
    try:
        return {"point": pt.experiment, "label": pt.label, "status": "ok",
                **EXPERIMENTS[pt.experiment](pt.params, sub, seed)}
    except ConfigError:
        raise
    except Exception as exc:
        from .background import ProfileError
        if isinstance(exc, ProfileError):
            raise ConfigError(f"{pt.experiment}: {exc}") from None
        return {"point": pt.experiment, "label": pt.label, "status": "error",
                "error": f"{type(exc).__name__}: {exc}", "csv": [], "checks": []}


def run(config):
    """Execute every sweep point; returns the summary report (also written to out/summary.json)."""
    jobs = [(pt, config.out, config.seed) for pt in config.points]
    if not jobs:
        return {"points": [], "passed": True}
    n = min(_threads(), len(jobs))
    if n > 1:
        with ProcessPoolExecutor(n) as ex:
            results = list(ex.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]
    summary = {"points": results,
               "passed": all(r["status"] == "ok" and all(c["passed"] for c in r["checks"]) for r in results)}
    Path(config.out).mkdir(parents=True, exist_ok=True)
    (Path(config.out) / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    return summary


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    return str(o)


# --------------------------------------------------------------------- suite

def _suite_worker(k):
    from . import acceptance
    return acceptance.run_check(k)


def run_suite(numbers=None, out=None, stream=sys.stdout):
    from . import acceptance
    numbers = numbers or sorted(acceptance.CHECKS)
    n = min(_threads(), len(numbers))
    if n > 1:
        with ProcessPoolExecutor(n) as ex:
            checks = list(ex.map(_suite_worker, numbers))
    else:
        checks = [_suite_worker(k) for k in numbers]
    for c in checks:
        print(c.line(), file=stream, flush=True)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        rep = [{"number": c.number, "name": c.name, "passed": c.passed, "seconds": c.seconds,
                "measured": c.measured} for c in checks]
        (Path(out) / "acceptance.json").write_text(json.dumps(rep, indent=2, default=_json_default) + "\n")
    return checks


# ----------------------------------------------------------------------- argv

_FLAG_NAMES = {"lambda": "lam"}


def _add_schema_flags(sp, experiment):
    for key, (typ, default, _) in SCHEMA[experiment].items():
        sp.add_argument(f"--{key}", dest=_FLAG_NAMES.get(key, key), default=None,
                        help=f"default {default}")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="degmhd", description="Degenerate E-MHD / Hall-MHD instability experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SCHEMA:
        sp = sub.add_parser(name)
        _add_schema_flags(sp, name)
        sp.add_argument("--out", default="results")
        sp.add_argument("--seed", default="0")
        sp.add_argument("--plot", action="store_true", help="also write an SVG of each CSV")
    sp = sub.add_parser("suite", help="run the acceptance battery")
    sp.add_argument("--only", default="", help="comma-separated criterion numbers")
    sp.add_argument("--out", default=None)
    sp = sub.add_parser("run", help="run a config file of sweep points")
    sp.add_argument("config")
    sp = sub.add_parser("plot", help="SVG line plot of a CSV with fitted slopes")
    sp.add_argument("csv")
    sp.add_argument("--kind", choices=("semilog", "loglog"), default="semilog")
    sp.add_argument("--x", default="t")
    sp.add_argument("--y", action="append")
    sp.add_argument("--out", required=True)
    return ap


_PLOT_COLUMNS = {"background": ("loglog", ["V_inf", "Pi_minus_Pie_L2"]),
                 "wavepacket": ("semilog", ["norm_L2", "norm_mixed_p", "norm_W1p"]),
                 "linear-growth": ("semilog", ["L2", "Wsp", "certified_lower_bound"]),
                 "bichar": ("semilog", ["|Xi|"])}


def _numerical_errors():
    from .background import DivergenceError, ShockError, StepError
    from .bichar import RayDomainError
    return (StepError, DivergenceError, ShockError, np.linalg.LinAlgError, FloatingPointError, RayDomainError)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:             # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        _threads()
        if args.command == "suite":
            nums = [int(x) for x in args.only.split(",") if x.strip()] or None
            checks = run_suite(nums, args.out)
            return EXIT_OK if all(c.passed for c in checks) else EXIT_ACCEPTANCE
        if args.command == "plot":
            _, slopes = plot(args.csv, args.kind, args.x, args.y, args.out)
            for k, v in slopes.items():
                print(f"{k}: slope {v:.4f}")
            return EXIT_OK
        if args.command == "run":
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"{args.config}: {exc.strerror}") from None
            summary = run(parse_config(text))
        else:
            raw = {k: getattr(args, _FLAG_NAMES.get(k, k)) for k in SCHEMA[args.command]}
            params = validate(args.command, {k: v for k, v in raw.items() if v is not None})
            seed = _convert("seed", int, args.seed, _nonneg)
            summary = run(ExperimentConfig(seed, args.out, [SweepPoint(args.command, "", params)]))
            if args.plot and args.command in _PLOT_COLUMNS:
                kind, cols = _PLOT_COLUMNS[args.command]
                for pt in summary["points"]:
                    for c in pt["csv"]:
                        plot(c, kind, "t", cols, Path(c).with_suffix(".svg"))
        for pt in summary["points"]:
            print(f"{pt['point']} {pt['label']}".strip() + f": {pt['status']}")
            for c in pt.get("csv", []):
                print(f"  wrote {c}")
            for c in pt.get("checks", []):
                print("  " + ", ".join(f"{k}={v}" for k, v in c.items()))
            if pt["status"] == "error":
                print(f"  {pt['error']}", file=sys.stderr)
        if any(pt["status"] == "error" for pt in summary["points"]):
            return EXIT_NUMERICAL
        return EXIT_OK if summary["passed"] else EXIT_ACCEPTANCE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CsvError as exc:
        print(f"csv error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _numerical_errors() as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
