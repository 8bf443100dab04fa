"""Zeros of the Floquet discriminant, domain labels and the consistency verdict.

A pair is asymptotically consistent when ``G`` has no zero of odd order in
the interior of ``closure(D1) u closure(D4)``. Odd zeros are branch points,
so the verdict depends on where cuts are drawn; three cut strategies stand
in for "any choice of cuts".
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .background import PeriodicPair
from .floquet import (
    DEFAULT_TOL,
    ContinuationAmbiguous,
    PathBlocked,
    _branch_upper,
    anchor_point,
    anchored_branch,
    continue_branch,
    monodromy,
    monodromy_dk,
)
from .numerics import Contour, NumericsError, PhaseJump, ZeroOnContour, winding_numbers

CUT_STRATEGIES = ("radial", "level", "vertical")
DOMAINS = ("D1", "D2", "D3", "D4")
BOUNDARY_TOL = 1e-6
LOC_TOL = 1e-3
N_CIRCLE = 48
# Off-centre split fractions keep cell edges away from the symmetry axes.
SPLIT_FRACTIONS = ((0.5617, 0.4563), (0.4563, 0.6213), (0.6213, 0.5391), (0.4111, 0.5827))
NUDGES = (0.0, 0.0037, 0.0071, 0.0093)


class DepthExceeded(NumericsError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial or []


class Undecidable(NumericsError):
    pass


class DivisionNearZero(NumericsError):
    pass


@dataclass
class ZeroRecord:
    location: complex
    multiplicity: int
    kind: str = "G-zero"
    half_plane: str = "upper"
    adjacency: frozenset = frozenset()
    violating: bool | None = None
    status: str = "resolved"
    notes: list = field(default_factory=list)

    @property
    def parity(self) -> str:
        return "odd" if self.multiplicity % 2 else "even"

    def to_dict(self) -> dict:
        return {
            "location": [self.location.real, self.location.imag],
            "multiplicity": self.multiplicity,
            "parity": self.parity,
            "kind": self.kind,
            "half_plane": self.half_plane,
            "adjacency": sorted(self.adjacency),
            "violating": self.violating,
            "status": self.status,
            "notes": list(self.notes),
        }


@dataclass
class Verdict:
    status: str
    witnesses: list
    window: tuple
    cut_strategy: tuple
    notes: list = field(default_factory=list)
    zeros: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "window": list(self.window),
            "cut_strategy": list(self.cut_strategy),
            "notes": list(self.notes),
        }


def half_plane_of(k: complex, tol: float = 0.0) -> str:
    if abs(k.imag) <= tol:
        return "real-axis"
    return "upper" if k.imag > 0 else "lower"


# ---------------------------------------------------------------------------
# Zero finding


class _CachedTarget:
    """Vectorized ``G``, ``Z12`` or ``Z21`` with a value cache keyed by k."""

    def __init__(self, pair: PeriodicPair, target: str, tol: float):
        if target not in ("G", "Z12", "Z21"):
            raise ValueError(f"unknown target {target}")
        self.pair, self.target, self.tol = pair, target, tol
        self.cache: dict = {}
        self.n_evals = 0

    def __call__(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, complex)
        flat = k.ravel()
        out = np.empty(flat.shape, complex)
        miss = [i for i, v in enumerate(flat) if v not in self.cache]
        if miss:
            uniq = np.unique(flat[miss])
            Z = monodromy(self.pair, uniq, self.tol)
            if self.target == "G":
                vals = (Z[:, 0, 0] + Z[:, 1, 1]) ** 2 - 4
            elif self.target == "Z12":
                vals = Z[:, 0, 1]
            else:
                vals = Z[:, 1, 0]
            self.n_evals += len(uniq)
            self.cache.update(zip(uniq.tolist(), vals.tolist()))
        for i, v in enumerate(flat):
            out[i] = self.cache[v]
        return out.reshape(k.shape)


@dataclass
class ZeroCensus:
    records: list
    window: tuple
    total_winding: int
    n_evals: int
    notes: list = field(default_factory=list)


def _rect(cell):
    return Contour.rectangle(*cell)


def _split(cell, frac):
    x0, x1, y0, y1 = cell
    xm = x0 + frac[0] * (x1 - x0)
    ym = y0 + frac[1] * (y1 - y0)
    return [(x0, xm, y0, ym), (xm, x1, y0, ym), (xm, x1, ym, y1), (x0, xm, ym, y1)]


def _diam(cell):
    return float(np.hypot(cell[1] - cell[0], cell[3] - cell[2]))


def _windings(f, cells, n_samples, floor):
    ns = [_samples_for(f, c, n_samples) for c in cells]
    return winding_numbers(f, [_rect(c) for c in cells], n_samples=ns, floor=floor)


def _samples_for(f, cell, n_min):
    """Samples so the large-k phase ``4 k^2 tau`` moves under ``pi/4`` per step."""
    x0, x1, y0, y1 = cell
    perim = 2 * ((x1 - x0) + (y1 - y0))
    kmax = max(abs(complex(x, y)) for x in (x0, x1) for y in (y0, y1))
    return max(n_min, int(np.ceil(perim * 32 * kmax * f.pair.tau / np.pi)))


def _split_cell(f, cell, count, n_samples, floor):
    """Children of ``cell`` with their windings; tries several split points."""
    last = None
    for frac in SPLIT_FRACTIONS:
        kids = _split(cell, frac)
        try:
            w = _windings(f, kids, n_samples, floor)
        except (ZeroOnContour, PhaseJump) as exc:
            last = exc
            continue
        if sum(w) == count:
            return kids, w
        last = NumericsError(f"children windings {w} do not sum to {count}")
    raise last


def _cluster_cells(cells, counts, link):
    centres = np.array([complex((c[0] + c[1]) / 2, (c[2] + c[3]) / 2) for c in cells])
    parent = list(range(len(cells)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            if abs(centres[i] - centres[j]) <= link:
                parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(len(cells)):
        groups.setdefault(find(i), []).append(i)
    out = []
    for idx in groups.values():
        w = np.array([counts[i] for i in idx], float)
        loc = complex(np.sum(w * centres[idx]) / w.sum())
        out.append((loc, int(w.sum())))
    return out


def zero_census(
    pair: PeriodicPair,
    window: tuple,
    target: str = "G",
    max_depth: int = 30,
    loc_tol: float = LOC_TOL,
    tol: float = 1e-9,
    n_samples: int = 64,
    floor: float | None = None,
) -> ZeroCensus:
    """Adaptive quadrisection of ``window = (x0, x1, y0, y1)`` by the argument principle.

    ``floor`` defaults to ``100 * tol``: values that small are below the
    integration noise, so a contour through them is treated as hitting a zero.
    """
    floor = 100 * tol if floor is None else floor
    f = _CachedTarget(pair, target, tol)
    x0, x1, y0, y1 = map(float, window)
    notes = []
    total = None
    for nudge in NUDGES:
        dx, dy = nudge * (x1 - x0), nudge * (y1 - y0)
        win = (x0 - dx, x1 + dx, y0 - dy, y1 + dy)
        try:
            total = _windings(f, [win], max(n_samples, 256), floor)[0]
            break
        except ZeroOnContour:
            continue
    if total is None:
        raise ZeroOnContour("window boundary meets a zero even after nudging by 1%")
    if win != (x0, x1, y0, y1):
        notes.append(f"window nudged outward to {win}")

    level = [(win, total)] if total else []
    final_cells, final_counts = [], []
    depth = 0
    while level:
        if depth > max_depth:
            partial = [ZeroRecord(complex((c[0] + c[1]) / 2, (c[2] + c[3]) / 2), n, target + "-zero", status="undecided")
                       for c, n in level]
            raise DepthExceeded(f"max_depth {max_depth} reached with {len(level)} unresolved cells", partial)
        nxt = []
        to_split = []
        for cell, n in level:
            if _diam(cell) < loc_tol:
                final_cells.append(cell)
                final_counts.append(n)
            else:
                to_split.append((cell, n))
        if to_split:
            kids = [_split(c, SPLIT_FRACTIONS[0]) for c, _ in to_split]
            flat = [k for ks in kids for k in ks]
            try:
                w = _windings(f, flat, n_samples, floor)
                groups = [w[4 * i : 4 * i + 4] for i in range(len(to_split))]
            except (ZeroOnContour, PhaseJump):
                groups = [None] * len(to_split)
            for (cell, n), ks, g in zip(to_split, kids, groups):
                if g is None or sum(g) != n:
                    try:
                        ks, g = _split_cell(f, cell, n, n_samples, floor)
                    except NumericsError as exc:
                        noisy = isinstance(exc, (ZeroOnContour, PhaseJump))
                        if _diam(cell) > 50 * loc_tol and not (noisy and _diam(cell) <= 0.05 * _diam(win)):
                            raise
                        # Values near a high-order zero sink below the noise
                        # floor; keep the cell and locate the zero on a circle.
                        if _diam(cell) > 50 * loc_tol:
                            notes.append(f"cell of diameter {_diam(cell):.3g} kept unsplit: |{target}| below the noise floor")
                        final_cells.append(cell)
                        final_counts.append(n)
                        continue
                nxt.extend((k, m) for k, m in zip(ks, g) if m)
        level = nxt
        depth += 1

    link = 3 * loc_tol + max([_diam(c) for c in final_cells] + [0.0])
    clusters = _cluster_cells(final_cells, final_counts, link)
    records = []
    locs = [c for c, _ in clusters]
    for loc, m in clusters:
        others = [abs(loc - o) for o in locs if o != loc]
        cap = 0.45 * min(others) if others else np.inf
        rec = ZeroRecord(loc, m, f"{target}-zero", half_plane_of(loc))
        rec.location, mc = _refine_on_circle(f, loc, m, 2 * loc_tol, cap, n_samples, floor)
        rec.half_plane = half_plane_of(rec.location)
        if mc != m:
            rec.notes.append(f"circle winding {mc} differs from cell count {m}")
        records.append(rec)
    records = _symmetrize_real(records, loc_tol)
    records.sort(key=lambda r: (round(r.location.real, 12), round(r.location.imag, 12)))
    if sum(r.multiplicity for r in records) != total:
        notes.append("multiplicity sum differs from total winding")
    return ZeroCensus(records, win, int(total), f.n_evals, notes)


def _refine_on_circle(f, loc, m, r, cap, n_samples, floor):
    """Winding and centroid of the zeros inside a circle about ``loc``.

    The radius doubles until the values are resolvable and the circle holds
    at least ``m`` zeros. With ``m`` zeros
    inside, ``log(f / (k - loc)^m)`` is single valued on the circle and its
    ``(k - loc)^{-1}`` Laurent coefficient equals ``-m (centroid - loc)``.
    """
    r = min(r, cap)
    while True:
        try:
            mc = winding_numbers(f, [Contour.circle(loc, r)], n_samples=n_samples, floor=floor)[0]
        except (ZeroOnContour, PhaseJump):
            mc = None
        # Too small a circle may miss zeros of a cell kept unsplit.
        if mc is not None and mc >= m:
            break
        if 2 * r > cap:
            return loc, mc
        r *= 2
    if mc != m or m == 0:
        return loc, mc
    N = 128
    th = 2 * np.pi * np.arange(N) / N
    w = r * np.exp(1j * th)
    v = f(loc + w)
    # Unwrap the phase so that h is continuous around the circle.
    h = np.log(np.abs(v)) - m * np.log(r) + 1j * np.unwrap(np.angle(v) - m * th)
    a_m1 = np.mean(h * w)
    return complex(loc - a_m1 / m), mc


def _symmetrize_real(records, loc_tol):
    """Snap near-real zeros without a separate mirror image onto the real axis."""
    for r in records:
        if abs(r.location.imag) <= 2 * loc_tol:
            mirror = [q for q in records if q is not r and abs(q.location - r.location.conjugate()) <= 2 * loc_tol]
            if not mirror:
                r.location = complex(r.location.real, 0.0)
                r.half_plane = "real-axis"
    return records


def find_zeros(pair: PeriodicPair, window: tuple, target: str = "G", max_depth: int = 30, **kw) -> list:
    """Zeros of ``target`` in ``window = (x0, x1, y0, y1)`` with multiplicities."""
    return zero_census(pair, window, target, max_depth, **kw).records


# ---------------------------------------------------------------------------
# Domain labels


def _label(k: complex, logabs_z: float, tau: float, btol: float) -> str:
    if abs(k.imag) < btol or abs(logabs_z) < btol * tau:
        return "boundary"
    up = k.imag > 0
    pos = logabs_z > 0
    if up:
        return "D1" if pos else "D2"
    return "D3" if pos else "D4"


def label_domain(pair: PeriodicPair, k: complex, zeros=(), tol: float = BOUNDARY_TOL, cuts=()) -> str:
    """Domain of ``k`` from ``(sign Im k, sign Im Omega~)`` on the anchored branch.

    ``cuts`` is an optional list of ``(start, end)`` segments; the sheet flips
    once per crossing of the continuation path with a cut.
    """
    k = complex(k)
    if abs(k.imag) < tol:
        return "boundary"
    if cuts:
        s, L = _sheet_at(pair, k, [z.location if isinstance(z, ZeroRecord) else z for z in zeros], cuts)
    else:
        bv = anchored_branch(pair, k, [z.location if isinstance(z, ZeroRecord) else z for z in zeros])
        L = bv.logz
    return _label(k, float(np.real(L)), pair.tau, tol)


# ---------------------------------------------------------------------------
# Cuts and the slit-circle classification


def _segments_cross(P: np.ndarray, a: complex, b: complex) -> int:
    """Number of proper crossings of polyline ``P`` with the segment ``[a, b]``."""
    p, q = P[:-1], P[1:]

    def cross(u, v):
        return (np.conj(u) * v).imag

    d1 = cross(b - a, p - a)
    d2 = cross(b - a, q - a)
    d3 = cross(q - p, a - p)
    d4 = cross(q - p, b - p)
    hit = (d1 * d2 < 0) & (d3 * d4 < 0)
    return int(np.count_nonzero(hit))


def _sheet_at(pair, k, avoid, cuts, r=None, tol=DEFAULT_TOL):
    """``(sqrtG, log z)`` at an upper-half-plane ``k`` respecting ``cuts``."""
    k = complex(k)
    reflected = k.imag < 0
    kt = k.conjugate() if reflected else k
    av = []
    for p in avoid:
        p = complex(p).conjugate() if complex(p).imag < 0 else complex(p)
        if all(abs(p - q) > 1e-12 for q in av):
            av.append(p)
    if r is None:
        r = 1e-3
    _, pts, s, L, _ = _branch_upper(pair, kt, av, max(abs(kt), 1.0), r / 3, tol)
    n = sum(_segments_cross(pts, a, b) for a, b in cuts)
    sv, Lv = complex(s[-1]), complex(L[-1])
    if n % 2:
        sv, Lv = -sv, -Lv
    if reflected:
        sv, Lv = -sv.conjugate(), -Lv.conjugate()
    return sv, Lv


@lru_cache(maxsize=512)
def _hub(pair, kup, rho, avoid, tol):
    """Anchored continuation to a hub point ``2 rho`` from ``kup`` toward the anchor."""
    kA = anchor_point(pair, max(abs(kup), 1.0))
    u = (kA - kup) / abs(kA - kup)
    hub = kup + 2 * rho * u
    return _branch_upper(pair, hub, list(avoid), max(abs(hub), 1.0), rho / 6, tol)


def _sheet_via_hub(pair, kup, rho, start, avoid, cuts, tol=DEFAULT_TOL):
    """Branch at ``kup + rho e^{i start}`` reached through the cached hub.

    The path runs anchor -> hub, along the ``2 rho`` circle, then radially in;
    the sheet flips once per crossing of the whole path with a cut.
    """
    av = []
    for p in avoid:
        p = complex(p).conjugate() if complex(p).imag < 0 else complex(p)
        if all(abs(p - q) > 1e-12 for q in av):
            av.append(p)
    _, pts, s, L, Z = _hub(pair, complex(kup), float(rho), tuple(av), tol)
    ph = float(np.angle(pts[-1] - kup))
    d = np.mod(start - ph, 2 * np.pi)
    if d > np.pi:
        d -= 2 * np.pi
    n = max(4, int(np.ceil(48 * abs(d) / (2 * np.pi))) + 1)
    arc = kup + 2 * rho * np.exp(1j * (ph + d * np.linspace(0, 1, n)))
    radial = kup + np.linspace(2 * rho, rho, 4)[1:] * np.exp(1j * start)
    path = np.concatenate([arc, radial])
    P, s2, L2, _ = continue_branch(pair, path, s[-1], L[-1], tol, Z0=Z[-1])
    full = np.concatenate([pts, P[1:]])
    sv, Lv = complex(s2[-1]), complex(L2[-1])
    if sum(_segments_cross(full, a, b) for a, b in cuts) % 2:
        sv, Lv = -sv, -Lv
    return sv, Lv


def _lap(pair, center, radius, n, start_angle, sweep, s0=None, L0=None, tol=DEFAULT_TOL):
    """Continue the branch along an arc; returns (points, angles, sqrtG, log z) at the samples."""
    ang = start_angle + sweep * np.arange(n + 1) / n
    pts = center + radius * np.exp(1j * ang)
    Z0 = monodromy(pair, pts[:1], tol)[0]
    if s0 is None:
        tr = Z0[0, 0] + Z0[1, 1]
        s0 = complex(np.sqrt(tr**2 - 4))
        z0 = (tr - s0) / 2 if abs(tr - s0) >= abs(tr + s0) else 2 / (tr + s0)
        L0 = complex(np.log(z0))
    P, s, L, _ = continue_branch(pair, pts, s0, L0, tol, Z0=Z0)
    idx = _original_indices(P, pts)
    return pts, ang, s[idx], L[idx]


def _original_indices(P, pts):
    """Positions of ``pts`` inside the refined path ``P`` (refinement only inserts)."""
    idx, j = [], 0
    for i, p in enumerate(P):
        if j < len(pts) and p == pts[j]:
            idx.append(i)
            j += 1
    if j != len(pts):
        raise ContinuationAmbiguous("refined path lost an original vertex")
    return np.array(idx)


@lru_cache(maxsize=512)
def level_direction(pair: PeriodicPair, kappa: complex, radius: float, n: int = 96, tol: float = DEFAULT_TOL) -> float:
    """Angle of a local ``Im Omega~ = 0`` ray leaving ``kappa``.

    Found from the sign changes of ``log|z|`` over one full lap; the
    continued value ends on the opposite sheet, so odd zeros always show at
    least one interior sign change. With several rays, the one nearest the
    radial direction is returned.
    """
    kappa = complex(kappa)
    # Start off the axes so that no sample sits exactly on the real line.
    _, ang, _, L = _lap(pair, kappa, radius, n, np.pi / 2 + np.pi / n, 2 * np.pi, tol=tol)
    f = np.real(L)
    ch = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
    if ch.size == 0:
        raise Undecidable("no Im Omega~ = 0 ray found around the zero")
    th = []
    for j in ch:
        t = f[j] / (f[j] - f[j + 1])
        th.append(ang[j] + t * (ang[j + 1] - ang[j]))
    th = np.array(th)
    if kappa.imag == 0:
        # Real zeros: the level ray runs along the axis on the |tr Z| < 2 side.
        snapped = np.where(np.cos(th) >= 0, 0.0, np.pi)
        ref = np.angle(kappa) if kappa != 0 else 0.0
        return float(snapped[np.argmin(np.abs(np.angle(np.exp(1j * (snapped - ref)))))])
    ref = np.angle(kappa)
    return float(th[np.argmin(np.abs(np.angle(np.exp(1j * (th - ref)))))])


def cut_direction(pair: PeriodicPair, kappa: complex, strategy: str, radius: float) -> float:
    """Angle of the cut leaving an upper-half-plane or real zero."""
    kappa = complex(kappa)
    if strategy not in CUT_STRATEGIES:
        raise ValueError(f"unknown cut strategy {strategy}")
    real = kappa.imag == 0
    outward = 0.0 if kappa.real >= 0 else np.pi
    if strategy == "radial":
        return outward if real else float(np.angle(kappa))
    if strategy == "vertical":
        return (np.pi - outward) if real else -np.pi / 2
    return level_direction(pair, kappa, radius)


def cut_segment(kappa: complex, angle: float, far: float):
    """Cut from ``kappa`` along ``angle``; upper cuts stop at the real axis."""
    d = np.exp(1j * angle)
    end = kappa + far * d
    if kappa.imag > 0 and d.imag < 0:
        t = kappa.imag / -d.imag
        end = kappa + min(t, far) * d
    return complex(kappa), complex(end)


def cut_system(pair, odd_zeros, strategy, radius, far):
    """All cut segments for the odd zeros, mirrored to keep conjugation symmetry."""
    segs = []
    for kap in odd_zeros:
        kap = complex(kap)
        if kap.imag < 0:
            continue
        a, b = cut_segment(kap, cut_direction(pair, kap, strategy, radius), far)
        segs.append((a, b))
        if kap.imag > 0:
            segs.append((a.conjugate(), b.conjugate()))
    return segs


@lru_cache(maxsize=32)
def _gamma_components(pair: PeriodicPair, R: float, h: float, tol: float = 1e-6):
    """Components of the upper half-disc ``|k| < R`` minus ``Gamma = {|z| = 1}``.

    ``f = |log|z|| / tau = |Im Om~|`` is sheet free. Along an edge ``e`` the
    signed ``Im Om~`` moves by about ``pred = h |Re(tr' e / sqrtG)| / tau``
    (exact derivative from the variational equation); it changes sign on the
    edge iff both ends are within ``pred`` of zero, i.e. ``max(f_a, f_b) <
    pred``. Such edges are cut. Returns ``(xs, ys, labels)``; nodes outside
    the disc get label -1.
    """
    xs = np.arange(-R, R + 0.5 * h, h)
    ys = np.arange(0.5 * h, R + 0.5 * h, h)
    K = xs[None, :] + 1j * ys[:, None]
    inside = np.abs(K) <= R
    Z, dZ = monodromy_dk(pair, K[inside], tol)
    tr = np.full(K.shape, 3.0 + 0j)
    dtr = np.zeros(K.shape, complex)
    tr[inside] = Z[:, 0, 0] + Z[:, 1, 1]
    dtr[inside] = dZ[:, 0, 0] + dZ[:, 1, 1]
    sp = np.sqrt(tr * tr - 4)
    za, zb = np.abs(tr - sp) / 2, np.abs(tr + sp) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.abs(np.log(np.maximum(za, zb))) / pair.tau
        slope = dtr / sp / pair.tau
    idx = np.arange(K.size).reshape(K.shape)
    rows, cols = [], []
    for e, lo, hi in ((1.0, (slice(None), slice(None, -1)), (slice(None), slice(1, None))),
                      (1j, (slice(None, -1), slice(None)), (slice(1, None), slice(None)))):
        pred = h * 0.5 * (np.abs((slope[lo] * e).real) + np.abs((slope[hi] * e).real))
        with np.errstate(invalid="ignore"):
            ok = ~(np.maximum(f[lo], f[hi]) < pred) & inside[lo] & inside[hi]
        rows.append(idx[lo][ok])
        cols.append(idx[hi][ok])
    r, c = np.concatenate(rows), np.concatenate(cols)
    A = coo_matrix((np.ones(r.size), (r, c)), shape=(K.size, K.size))
    _, labels = connected_components(A, directed=False)
    labels = labels.reshape(K.shape)
    labels[~inside] = -1
    return xs, ys, labels


def level_neighbourhood_domain(pair: PeriodicPair, kup: complex, theta: float, R: float, h: float = 0.05) -> str:
    """Domain of the slit disc at an upper odd zero when cuts follow ``Gamma``.

    With the cut along the local level ray the slit disc lies in one
    component of the upper half-plane minus ``Gamma``. Admissible cuts keep
    ``D1`` minus the cuts connected, and ``D1`` contains the far first
    quadrant; so the disc can be ``D1`` only when its component reaches that
    sector, and is ``D2`` otherwise.
    """
    xs, ys, labels = _gamma_components(pair, float(R), float(h))
    back = kup - 1.5 * h * np.exp(1j * theta)
    cand = []
    for dx in (-1, 0, 1, 2):
        for dy in (-1, 0, 1, 2):
            i = int(np.floor((back.imag - ys[0]) / h)) + dy
            j = int(np.floor((back.real - xs[0]) / h)) + dx
            if 0 <= i < len(ys) and 0 <= j < len(xs) and labels[i, j] >= 0:
                cand.append((abs(xs[j] + 1j * ys[i] - back), labels[i, j]))
    if not cand:
        raise Undecidable("no grid node off Gamma next to the zero")
    seed = min(cand)[1]
    K = xs[None, :] + 1j * ys[:, None]
    ang = np.angle(K)
    far = (np.abs(K) >= 0.85 * R) & (ang > np.pi / 8) & (ang < 3 * np.pi / 8)
    return "D1" if np.any(labels[far] == seed) else "D2"


def _circle_radius(kappa, others, loc_tol):
    rho = 5 * loc_tol
    if others:
        rho = min(rho, 0.3 * min(abs(kappa - o) for o in others))
    if kappa.imag != 0 and abs(kappa.imag) < 3 * rho:
        rho = abs(kappa.imag) / 3
    return rho


def classify_zero(
    pair: PeriodicPair,
    zero: ZeroRecord,
    cut_strategy: str = "radial",
    zeros=(),
    n_c: int = N_CIRCLE,
    loc_tol: float = LOC_TOL,
    btol: float = BOUNDARY_TOL,
    tol: float = DEFAULT_TOL,
) -> ZeroRecord:
    """Fill ``adjacency`` and ``violating`` for one zero.

    Odd zeros are probed on a circle slit along the cut; the sheet at the
    first sample comes from the anchored continuation, corrected by the
    number of cut crossings of its path. The zero is violating when every
    non-boundary sample lies in ``D1 u D4``, i.e. the punctured neighbourhood
    sits in the interior of ``closure(D1) u closure(D4)``.
    """
    rec = replace(zero, notes=list(zero.notes))
    if zero.multiplicity % 2 == 0:
        rec.adjacency, rec.violating = frozenset(), False
        return rec
    kappa = complex(zero.location)
    lower = kappa.imag < 0
    kup = kappa.conjugate() if lower else kappa
    all_locs = [complex(z.location if isinstance(z, ZeroRecord) else z) for z in zeros]
    others = [o for o in all_locs if abs(o - kappa) > 1e-12]
    odd = [complex(z.location) for z in zeros if isinstance(z, ZeroRecord) and z.multiplicity % 2]
    if not any(abs(o - kappa) <= 1e-12 for o in odd):
        odd.append(kappa)
    near = [o.conjugate() if o.imag < 0 else o for o in others]
    near = [o for o in near + [o.conjugate() for o in near] if abs(o - kup) > 1e-12]
    rho = _circle_radius(kup, near, loc_tol)
    far = 4 * max([abs(o) for o in all_locs + [kappa]] + [1.0]) + 10
    if cut_strategy == "level" and kup.imag > 0:
        try:
            theta = cut_direction(pair, kup, cut_strategy, rho)
            R = 1.25 * max(abs(o) for o in all_locs + [kappa]) + 1.0
            lab = level_neighbourhood_domain(pair, kup, theta, R)
        except (PathBlocked, ContinuationAmbiguous, Undecidable) as exc:
            rec.status, rec.violating = "undecided", None
            rec.notes.append(f"{cut_strategy}: {exc}")
            return rec
        if lower:
            lab = {"D1": "D4", "D2": "D3"}[lab]
        rec.adjacency = frozenset([lab])
        rec.violating = lab in ("D1", "D4")
        return rec
    try:
        cuts = cut_system(pair, odd, cut_strategy, rho, far)
        theta = cut_direction(pair, kup, cut_strategy, rho)
        # Start just past the cut on the upper side and sweep the slit circle.
        if kup.imag == 0 and np.sin(theta + 2 * np.pi / n_c) < 0:
            start, sweep = theta - np.pi / n_c, -2 * np.pi + 2 * np.pi / n_c
        else:
            start, sweep = theta + np.pi / n_c, 2 * np.pi - 2 * np.pi / n_c
        s0, L0 = _sheet_via_hub(pair, kup, rho, start, [kup] + others, cuts, tol)
        pts, _, _, L = _lap(pair, kup, rho, n_c - 1, start, sweep, s0, L0, tol)
    except (PathBlocked, ContinuationAmbiguous, Undecidable) as exc:
        rec.status = "undecided"
        rec.violating = None
        rec.notes.append(f"{cut_strategy}: {exc}")
        return rec
    labels = [_label(complex(p), float(np.real(l)), pair.tau, btol) for p, l in zip(pts, L)]
    if lower:
        swap = {"D1": "D4", "D4": "D1", "D2": "D3", "D3": "D2", "boundary": "boundary"}
        labels = [swap[x] for x in labels]
    nb = sum(x == "boundary" for x in labels)
    inner = {x for x in labels if x != "boundary"}
    rec.adjacency = frozenset(inner)
    if nb > 0.25 * len(labels) or not inner:
        rec.status = "undecided"
        rec.violating = None
        rec.notes.append(f"{cut_strategy}: {nb}/{len(labels)} samples on the boundary set")
        return rec
    rec.violating = inner <= {"D1", "D4"}
    return rec


def consistency_verdict(
    pair: PeriodicPair,
    window: tuple,
    cut_strategies=CUT_STRATEGIES,
    zeros: list | None = None,
    **kw,
) -> Verdict:
    """Necessary-condition verdict over a finite family of cut strategies."""
    notes = []
    if zeros is None:
        try:
            census = zero_census(pair, window, **kw)
        except (DepthExceeded, NumericsError) as exc:
            return Verdict("undecided", [], tuple(window), tuple(cut_strategies), [f"zero search failed: {exc}"])
        zeros = census.records
        notes.extend(census.notes)
    odd = [z for z in zeros if z.multiplicity % 2]
    witnesses, undecided = [], False
    classified = []
    for strat in cut_strategies:
        for z in odd:
            r = classify_zero(pair, z, strat, zeros)
            r.notes.append(f"strategy={strat}")
            classified.append(r)
            if r.violating:
                witnesses.append(r)
            elif r.violating is None:
                undecided = True
    if any(z.status == "undecided" for z in zeros):
        undecided = True
    if witnesses:
        status = "inconsistent"
    elif undecided:
        status = "undecided"
    else:
        status = "consistent"
    return Verdict(status, witnesses, tuple(window), tuple(cut_strategies), notes, classified or list(zeros))


# ---------------------------------------------------------------------------
# Q^b and real-line checks


def qb_ratio(pair: PeriodicPair, k: complex, branch=None, tol: float = DEFAULT_TOL) -> complex:
    """``Q^b = B^b / A^b = -2 Z12 / (Z11 - Z22 - sqrtG)`` on the anchored branch."""
    bv = anchored_branch(pair, k, tol=tol) if branch is None else branch
    Z, s = bv.Z, bv.sqrtG
    d = Z[0, 0] - Z[1, 1]
    scale = max(1.0, float(np.abs(Z).max()))
    den1 = d - s
    den2 = 2 * Z[1, 0]
    if abs(den1) >= abs(den2):
        if abs(den1) < 1e-12 * scale:
            raise DivisionNearZero("A^b vanishes at k")
        return complex(-2 * Z[0, 1] / den1)
    if abs(den2) < 1e-12 * scale:
        raise DivisionNearZero("A^b vanishes at k")
    return complex((d + s) / den2)


def focusing_realline_check(pair: PeriodicPair, samples, tol: float = 1e-9) -> bool:
    """``G(k)`` real and nonpositive at every real sample (focusing pairs only)."""
    if pair.lam != -1:
        raise ValueError("focusing_realline_check requires lambda = -1")
    k = np.asarray(samples, float).astype(complex)
    Z = monodromy(pair, k)
    G = (Z[:, 0, 0] + Z[:, 1, 1]) ** 2 - 4
    return bool(np.all(G.real <= tol) and np.all(np.abs(G.imag) <= tol))


# ---------------------------------------------------------------------------
# Plot data


def domain_grid(pair: PeriodicPair, window: tuple, n: int = 41, zeros=(), btol: float = BOUNDARY_TOL, tol: float = 1e-9):
    """Domain labels on an ``n x n`` grid over the upper half of ``window``, mirrored below.

    The branch is carried along a snake path through the grid rows, starting
    from an anchored value at the first node.
    """
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, n)
    ytop = max(abs(y0), abs(y1))
    ys = np.linspace(ytop, 0.0, (n + 1) // 2 + 1)[:-1]
    rows = []
    for i, y in enumerate(ys):
        row = xs if i % 2 == 0 else xs[::-1]
        rows.append(row + 1j * y)
    path = np.concatenate(rows)
    bv = anchored_branch(pair, path[0], [z.location if isinstance(z, ZeroRecord) else z for z in zeros], tol=tol)
    P, s, L, _ = continue_branch(pair, path, bv.sqrtG, bv.logz, tol)
    idx = _original_indices(P, path)
    out = []
    for p, l in zip(path, L[idx]):
        lab = _label(complex(p), float(np.real(l)), pair.tau, btol)
        out.append((complex(p), lab, float(np.real(l)) / pair.tau))
        mirror = {"D1": "D4", "D2": "D3", "boundary": "boundary"}[lab]
        out.append((complex(p).conjugate(), mirror, -float(np.real(l)) / pair.tau))
    out.sort(key=lambda r: (r[0].imag, r[0].real))
    return out


def level_segments(grid, n_x: int):
    """Midpoints where ``Im Omega~`` changes sign between horizontal grid neighbours."""
    pts = sorted(grid, key=lambda r: (r[0].imag, r[0].real))
    segs = []
    for a, b in zip(pts[:-1], pts[1:]):
        if a[0].imag == b[0].imag and np.sign(a[2]) * np.sign(b[2]) < 0:
            t = a[2] / (a[2] - b[2])
            segs.append(a[0] + t * (b[0] - a[0]))
    return segs
