"""Command-line front end: config parsing, dispatch, JSON reports, CSV plot data."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import exponential, halfline_spectral, soliton, spectrum
from .background import PeriodicPair
from .floquet import anchored_branch, background_eigenfunction, discriminant, monodromy
from .numerics import NumericsError

SCHEMA_VERSION = "1.0"
MODES = ("classify-exp", "scan", "soliton-check", "monodromy", "plot-data", "spectra")
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
SOLITON_CHECK_TOL = 1e-8


class ParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class ValidationError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str
    lam: int | None = None
    tau: float | None = None
    g0_modes: tuple = ()
    g1_modes: tuple = ()
    alpha: float | None = None
    omega: float | None = None
    c: complex | None = None
    gamma: float | None = None
    window: tuple | None = None
    tol: float = 1e-10
    loc_tol: float = spectrum.LOC_TOL
    cut_strategies: tuple = spectrum.CUT_STRATEGIES
    ks: tuple = ()
    n_random_k: int = 20
    seed: int = 0
    grid_n: int = 41
    datum_file: str | None = None
    datum_M: float | None = None
    datum_p: float = 10.0
    g0_file: str | None = None
    g1_file: str | None = None
    horizon: float | None = None
    n_per: int = 256
    full_scan: bool = False

    def echo(self) -> dict:
        d = asdict(self)
        d["c"] = None if self.c is None else [self.c.real, self.c.imag]
        d["g0_modes"] = [[n, v.real, v.imag] for n, v in self.g0_modes]
        d["g1_modes"] = [[n, v.real, v.imag] for n, v in self.g1_modes]
        d["ks"] = [[k.real, k.imag] for k in self.ks]
        d["window"] = None if self.window is None else list(self.window)
        d["cut_strategies"] = list(self.cut_strategies)
        return d

    def pair(self) -> PeriodicPair:
        if self.gamma is not None:
            return soliton.soliton_pair(soliton.soliton_params(self.gamma, self.omega))
        if self.alpha is not None:
            return self.triple().pair()
        if self.lam is None or self.tau is None:
            raise ValidationError("pair spec needs lambda and tau (or a triple or soliton spec)")
        return PeriodicPair(self.lam, self.tau, self.g0_modes, self.g1_modes)

    def triple(self) -> exponential.ExponentialTriple:
        return exponential.ExponentialTriple(self.alpha, self.omega, self.c, self.lam)


def _complex(s: str) -> complex:
    s = s.strip().replace(" ", "").replace("i", "j")
    if s in ("j", "+j", "-j"):
        s = s.replace("j", "1j")
    return complex(s)


_SCALARS = {
    "lambda": ("lam", int),
    "tau": ("tau", float),
    "alpha": ("alpha", float),
    "omega": ("omega", float),
    "c": ("c", _complex),
    "gamma": ("gamma", float),
    "tol": ("tol", float),
    "loc_tol": ("loc_tol", float),
    "n_random_k": ("n_random_k", int),
    "seed": ("seed", int),
    "grid_n": ("grid_n", int),
    "datum_file": ("datum_file", str),
    "datum_M": ("datum_M", float),
    "datum_p": ("datum_p", float),
    "g0_file": ("g0_file", str),
    "g1_file": ("g1_file", str),
    "horizon": ("horizon", float),
    "n_per": ("n_per", int),
    "full_scan": ("full_scan", lambda s: s.strip().lower() in ("1", "true", "yes")),
}


def parse_config(text: str) -> RunConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment.

    ``mode_g0 = n re im`` and ``mode_g1 = n re im`` may repeat, as may
    ``k = re im``. ``window = x0 x1 y0 y1`` and
    ``cut_strategies = radial, level`` take lists.
    """
    vals: dict = {}
    g0, g1, ks = [], [], []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(no, f"expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key in ("mode_g0", "mode_g1"):
                n, re_, im_ = val.split()
                (g0 if key == "mode_g0" else g1).append((int(n), complex(float(re_), float(im_))))
            elif key == "k":
                re_, im_ = val.split()
                ks.append(complex(float(re_), float(im_)))
            elif key == "window":
                w = tuple(float(v) for v in val.replace(",", " ").split())
                if len(w) != 4:
                    raise ValueError("window needs four numbers x0 x1 y0 y1")
                vals["window"] = w
            elif key == "cut_strategies":
                vals["cut_strategies"] = tuple(s.strip() for s in val.split(",") if s.strip())
            elif key == "mode":
                vals["mode"] = val
            elif key in _SCALARS:
                name, conv = _SCALARS[key]
                if name in vals:
                    raise ValueError(f"duplicate key {key!r}")
                vals[name] = conv(val)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ParseError(no, str(exc)) from None
    if "mode" not in vals:
        raise ValidationError("exactly one mode is required")
    cfg = RunConfig(**vals, g0_modes=tuple(g0), g1_modes=tuple(g1), ks=tuple(ks))
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.mode not in MODES:
        raise ValidationError(f"mode must be one of {', '.join(MODES)}")
    bad = [s for s in cfg.cut_strategies if s not in spectrum.CUT_STRATEGIES]
    if bad or not cfg.cut_strategies:
        raise ValidationError(f"unknown cut strategies {bad}")
    if cfg.tol <= 0 or cfg.loc_tol <= 0:
        raise ValidationError("tolerances must be positive")
    if cfg.lam is not None and cfg.lam not in (1, -1):
        raise ValidationError("lambda must be +1 or -1")
    if cfg.window is not None:
        x0, x1, y0, y1 = cfg.window
        if not (x0 < x1 and y0 < y1):
            raise ValidationError("window must satisfy x0 < x1 and y0 < y1")
        if cfg.mode in ("scan", "plot-data") and abs(y0 + y1) > 1e-14 * max(1.0, abs(y1)):
            raise ValidationError("window must be conjugation symmetric (y0 = -y1)")
    if cfg.mode == "classify-exp":
        if None in (cfg.lam, cfg.alpha, cfg.omega, cfg.c):
            raise ValidationError("classify-exp needs lambda, alpha, omega and c")
        if cfg.alpha <= 0 or cfg.omega == 0:
            raise ValidationError("classify-exp needs alpha > 0 and omega != 0")
    if cfg.mode == "soliton-check" or cfg.gamma is not None:
        if cfg.gamma is None or cfg.omega is None:
            raise ValidationError("soliton spec needs gamma and omega")
        if not cfg.omega > 0:
            raise ValidationError("soliton spec needs omega > 0")
    if cfg.mode in ("scan", "monodromy", "plot-data", "spectra"):
        try:
            cfg.pair()
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
    if cfg.mode == "scan" and cfg.window is None:
        raise ValidationError("scan needs a window")
    if cfg.mode in ("monodromy", "spectra") and not cfg.ks:
        raise ValidationError(f"{cfg.mode} needs at least one 'k = re im' line")
    if cfg.datum_file is not None and cfg.datum_M is None:
        raise ValidationError("datum_file needs datum_M (decay bound constant)")
    if (cfg.g0_file is None) != (cfg.g1_file is None):
        raise ValidationError("g0_file and g1_file go together")
    return cfg


@dataclass
class Report:
    mode: str
    inputs: dict
    verdict: dict | None = None
    zeros: list = field(default_factory=list)
    family: dict | None = None
    residuals: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "mode": self.mode,
            "inputs": self.inputs,
            "verdict": self.verdict,
            "zeros": self.zeros,
            "family": self.family,
            "residuals": self.residuals,
            "tables": self.tables,
            "notes": self.notes,
            "timing": self.timing,
        }


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _pmap(fn, items, jobs: int):
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# Modes


def _classify_exp(cfg, rep, jobs):
    verdict, tag = exponential.classify_triple(cfg.triple(), cfg.cut_strategies, cfg.full_scan, cfg.tol)
    rep.verdict = verdict.to_dict()
    rep.zeros = [z.to_dict() for z in verdict.zeros]
    rep.family = {"name": tag.name, "parameters": {k: _c(v) for k, v in tag.parameters.items()}}


def _scan(cfg, rep, jobs):
    pair = cfg.pair()
    census = spectrum.zero_census(pair, cfg.window, loc_tol=cfg.loc_tol)
    verdict = spectrum.consistency_verdict(pair, cfg.window, cfg.cut_strategies, zeros=census.records)
    rep.verdict = verdict.to_dict()
    rep.zeros = [z.to_dict() for z in census.records]
    rep.residuals = {"multiplicity_sum": sum(z.multiplicity for z in census.records),
                     "total_winding": census.total_winding}
    rep.notes.extend(census.notes)


def _random_soliton_ks(p, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        k = complex(rng.uniform(0.05, 1.5), rng.uniform(0.05, 1.5))
        # Z grows like e^{|Im 2k^2| tau}; beyond ~16 the E check measures rounding, not the identity
        if abs((2 * k * k).imag) * p.tau > 16:
            continue
        if abs(k.real) > 0.05 and min(abs(k - q) for q in (p.K1, p.K2, -p.K1, -p.K2)) > 0.05:
            out.append(k)
    return out


def _soliton_point(args):
    gamma, omega, k, tol = args
    p = soliton.soliton_params(gamma, omega)
    pair = soliton.soliton_pair(p)
    a, b, A, B = soliton.soliton_spectra(p, k)
    ar, br, Ar, Br = soliton.soliton_spectra_rational(p, k)
    bv = anchored_branch(pair, k, tol=tol)
    tau = p.tau
    sg = 2j * np.sin(2 * k * k * tau)
    E = background_eigenfunction(pair, 0.3 * tau, k, tol=tol, branch=bv).E
    E12, E22 = soliton.soliton_E(p, 0.3 * tau, k)
    return {
        "k": _c(k),
        "global_relation": soliton.soliton_global_relation_residual(p, k),
        "rational_forms": max(abs(a - ar), abs(b - br), abs(A - Ar), abs(B - Br)),
        "sqrtG": abs(bv.sqrtG - sg) / max(1.0, abs(sg)),
        "trace": abs(bv.Z[0, 0] + bv.Z[1, 1] - 2 * np.cos(2 * k * k * tau)) / max(1.0, abs(sg)),
        "OmegaTilde": abs(bv.OmegaTilde - 2 * k * k),
        "E": max(abs(E[0, 1] - E12), abs(E[1, 1] - E22)),
        "xpart": soliton.xpart_residual(p, 0.7, 0.2, k),
    }


def _soliton_check(cfg, rep, jobs):
    p = soliton.soliton_params(cfg.gamma, cfg.omega)
    ks = list(cfg.ks) or _random_soliton_ks(p, cfg.n_random_k, cfg.seed)
    rows = _pmap(_soliton_point, [(cfg.gamma, cfg.omega, k, cfg.tol) for k in ks], jobs)
    keys = [k for k in rows[0] if k != "k"]
    rep.tables["points"] = rows
    rep.residuals = {k: max(r[k] for r in rows) for k in keys}
    rep.residuals["l1_norm"] = soliton.l1_norm(p)
    worst = max(rep.residuals[k] for k in keys)
    rep.verdict = {"status": "pass" if worst <= SOLITON_CHECK_TOL else "fail", "max_residual": worst,
                   "threshold": SOLITON_CHECK_TOL}


def _monodromy(cfg, rep, jobs):
    pair = cfg.pair()
    rows = []
    for k in cfg.ks:
        bv = anchored_branch(pair, k, tol=cfg.tol)
        G, z, Om = discriminant(bv.Z, pair.tau, bv.sqrtG, bv.logz)
        rows.append({"k": _c(k), "Z": [[_c(v) for v in row] for row in bv.Z], "G": _c(G),
                     "sqrtG": _c(bv.sqrtG), "z": _c(z), "OmegaTilde": _c(Om),
                     "label": spectrum._label(complex(k), float(np.real(bv.logz)), pair.tau, spectrum.BOUNDARY_TOL)})
    rep.tables["points"] = rows


def _spectra_point(args):
    cfg, k = args
    pair = cfg.pair()
    notes = []
    if cfg.datum_file is not None:
        u0 = halfline_spectral.read_initial_datum(cfg.datum_file, cfg.datum_M, cfg.datum_p)
        a, b = halfline_spectral.initial_spectra(u0, pair.lam, k)
    else:
        a, b = 1.0 + 0j, 0j
        notes.append("zero initial datum")
    if cfg.g0_file is not None:
        traces = halfline_spectral.read_traces(cfg.g0_file, cfg.g1_file)
    else:
        T = cfg.horizon or 4 * pair.tau
        traces = halfline_spectral.BoundaryTraces.from_pair(pair, T, n=8)
        notes.append("traces equal to the background pair")
    bv = anchored_branch(pair, k, tol=cfg.tol)
    if bv.OmegaTilde.imag < 0:
        # k in D-: the first column gives conj A(conj k) and lam conj B(conj k), hence d(k)
        res = halfline_spectral.volterra_column(pair, traces, k, 1, cfg.horizon, cfg.n_per, cfg.tol, branch=bv)
        cA, cB = res.value
        s = halfline_spectral.SpectralSample(complex(k), complex(a), complex(b), complex("nan"), complex("nan"),
                                             d=complex(a * cA - b * cB), t_used=float(res.t[-1]),
                                             tail_estimate=res.tail_estimate, notes=notes)
        s.notes.append("k in D-: A, B not evaluated; d from the first column")
        return s.to_dict()
    res = halfline_spectral.volterra_column(pair, traces, k, 2, cfg.horizon, cfg.n_per, cfg.tol, branch=bv)
    B, A = res.value
    s = halfline_spectral.SpectralSample(complex(k), complex(a), complex(b), complex(A), complex(B),
                                         t_used=float(res.t[-1]), tail_estimate=res.tail_estimate, notes=notes)
    s.gr_residual = halfline_spectral.global_relation_residual(s)
    if not halfline_spectral.gr_admissible(res.branch):
        s.notes.append(f"global relation outside Im(Om~ + 2k^2) > {halfline_spectral.GR_MARGIN}")
    return s.to_dict()


def _spectra(cfg, rep, jobs):
    rep.tables["samples"] = _pmap(_spectra_point, [(cfg, k) for k in cfg.ks], jobs)
    rep.residuals["gr_margin"] = halfline_spectral.GR_MARGIN


def _plot_data(cfg, rep, jobs, out: Path | None):
    pair = cfg.pair()
    window = cfg.window or (-2.0, 2.0, -2.0, 2.0)
    census = spectrum.zero_census(pair, window, loc_tol=cfg.loc_tol)
    zeros = census.records
    grid = spectrum.domain_grid(pair, window, cfg.grid_n, zeros=[z.location for z in zeros])
    if cfg.gamma is not None:
        p = soliton.soliton_params(cfg.gamma, cfg.omega)
        cuts = soliton.soliton_cuts(p)
    else:
        odd = [z.location for z in zeros if z.multiplicity % 2]
        R = max(abs(v) for v in window)
        cuts = spectrum.cut_system(pair, odd, cfg.cut_strategies[0], R, 2 * R)
    contours = _level_polylines(grid, window)
    rep.zeros = [z.to_dict() for z in zeros]
    rep.tables["cuts"] = [[_c(a), _c(b)] for a, b in cuts]
    rep.residuals = {"n_grid": len(grid), "n_contour_polylines": len(contours)}
    if out is None:
        return
    with open(out / "domains.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k_re", "k_im", "label", "im_omega_tilde"])
        for k, lab, im in grid:
            w.writerow([repr(k.real), repr(k.imag), lab, repr(im)])
    with open(out / "zeros.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k_re", "k_im", "multiplicity", "parity", "half_plane"])
        for z in zeros:
            w.writerow([repr(z.location.real), repr(z.location.imag), z.multiplicity, z.parity, z.half_plane])
    with open(out / "cuts.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cut_id", "k_re", "k_im"])
        for i, (a, b) in enumerate(cuts):
            for pt in (a, b):
                w.writerow([i, repr(pt.real), repr(pt.imag)])
    with open(out / "contour.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["polyline_id", "kind", "k_re", "k_im"])
        for i, (kind, pts) in enumerate(contours):
            for pt in pts:
                w.writerow([i, kind, repr(pt.real), repr(pt.imag)])


def _level_polylines(grid, window):
    """``Im k = 0`` plus the ``Im Om~ = 0`` level curves traced on the domain grid."""
    from skimage.measure import find_contours

    x0, x1 = window[0], window[1]
    lines = [("im_k_zero", [complex(x0, 0.0), complex(x1, 0.0)])]
    xs = sorted({r[0].real for r in grid})
    ys = sorted({r[0].imag for r in grid})
    F = np.full((len(ys), len(xs)), np.nan)
    ix = {x: i for i, x in enumerate(xs)}
    iy = {y: i for i, y in enumerate(ys)}
    for k, _, im in grid:
        F[iy[k.imag], ix[k.real]] = im
    for c in find_contours(F, 0.0):
        r, q = c[:, 0], c[:, 1]
        pts = np.interp(q, np.arange(len(xs)), xs) + 1j * np.interp(r, np.arange(len(ys)), ys)
        lines.append(("im_omega_tilde_zero", [complex(p) for p in pts]))
    return lines


def run(cfg: RunConfig, out: Path | None = None, jobs: int = 1) -> tuple[Report, int]:
    """Dispatch one configured computation; returns the report and exit code."""
    rep = Report(cfg.mode, cfg.echo())
    t0 = time.perf_counter()
    try:
        if cfg.mode == "classify-exp":
            _classify_exp(cfg, rep, jobs)
        elif cfg.mode == "scan":
            _scan(cfg, rep, jobs)
        elif cfg.mode == "soliton-check":
            _soliton_check(cfg, rep, jobs)
        elif cfg.mode == "monodromy":
            _monodromy(cfg, rep, jobs)
        elif cfg.mode == "spectra":
            _spectra(cfg, rep, jobs)
        else:
            _plot_data(cfg, rep, jobs, out)
        code = EXIT_OK
    except NumericsError as exc:
        rep.verdict = {"status": "undecided", "reason": f"{type(exc).__name__}: {exc}"}
        code = EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        rep.notes.append(f"input error: {type(exc).__name__}: {exc}")
        code = EXIT_INPUT
    rep.timing = {"wall_seconds": time.perf_counter() - t0}
    return rep, code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nlsfloquet", description="Floquet consistency checks for periodic NLS boundary data")
    parser.add_argument("command", choices=MODES)
    parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument("--out", help="output directory for report.json and CSV files")
    parser.add_argument("--tol", type=float, help="override the integration tolerance")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for per-k work")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text(encoding="utf-8")
        if not any(l.split("#", 1)[0].strip().startswith("mode") and "mode_g" not in l for l in text.splitlines()):
            text += f"\nmode = {args.command}\n"
        cfg = parse_config(text)
        if cfg.mode != args.command:
            raise ValidationError(f"config mode {cfg.mode!r} does not match command {args.command!r}")
        if args.tol is not None:
            cfg = validate(replace(cfg, tol=args.tol))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    rep, code = run(cfg, out, args.jobs)
    text = json.dumps(rep.to_dict(), indent=2)
    if out is not None:
        (out / "report.json").write_text(text + "\n")
    print(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
