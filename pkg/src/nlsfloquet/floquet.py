"""Monodromy matrix, Floquet discriminant, diagonalizer and branch tracking.

The background t-part is ``psi_t = (V^b - 2ik^2 sigma_3) psi`` with
``psi(0) = I``; ``Z(k) = psi(tau, k)``. Branches of ``sqrt(G)`` and
``log z`` are fixed near a first-quadrant anchor by the large-k rules
``sqrt(G) ~ 2i sin(2k^2 tau)`` and ``log z ~ -2ik^2 tau`` and transported to
other points by continuation.
"""
from __future__ import annotations

from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from .background import PeriodicPair, eta, vb_from_values
from .numerics import (
    SIGMA3,
    NumericsError,
    det2,
    inv2,
    solve_matrix_ode_batch,
)

DEFAULT_TOL = 1e-10
ANCHOR_ARG = np.pi / 8
# Largest admissible 2*Im(k^2)*tau at the anchor: keeps |tr Z|^2 finite.
MAX_GROWTH = 300.0
# Eighth-order pair: roughly 4x fewer right-hand side calls per radian of
# phase than the 5(4) pair at the tolerances used here.
ODE_METHOD = "dop853"
# Local tolerance per unit requested accuracy. With few steps per period
# (small |k|, long tau) the global error reaches ~1000x the local tolerance;
# scipy's DOP853 shows the same ratio.
ODE_SAFETY = 0.01


class BranchPointProximity(NumericsError):
    pass


class PathBlocked(NumericsError):
    pass


class ContinuationAmbiguous(NumericsError):
    pass


class DeterminantDrift(NumericsError):
    pass


def _tpart_rhs(pair: PeriodicPair, ks: np.ndarray):
    """Batched ``Y -> (V^b - 2ik^2 sigma3) Y`` written entrywise for speed."""
    k2 = 2j * ks**2
    lam = pair.lam
    w = 2 * np.pi / pair.tau
    m0 = [(1j * w * n, c) for n, c in pair.g0_modes]
    m1 = [(1j * w * n, c) for n, c in pair.g1_modes]

    def series(modes, t):
        out = np.zeros(t.shape, complex)
        for a, c in modes:
            out += c * np.exp(a * t)
        return out

    def rhs(t, Y, sel):
        g0 = series(m0, t)
        g1 = series(m1, t)
        k = ks[sel]
        d = 1j * lam * (g0 * np.conj(g0)).real + k2[sel]
        b = 2 * k * g0 + 1j * g1
        c = lam * (2 * k * np.conj(g0) - 1j * np.conj(g1))
        out = np.empty_like(Y)
        y0, y1 = Y[:, 0, :], Y[:, 1, :]
        out[:, 0, :] = -d[:, None] * y0 + b[:, None] * y1
        out[:, 1, :] = c[:, None] * y0 + d[:, None] * y1
        return out

    return rhs


def _tpart_rhs_dk(pair: PeriodicPair, ks: np.ndarray):
    """Variational system for ``[psi; d psi/dk]`` stacked as a 4x2 state."""
    base = _tpart_rhs(pair, ks)
    w = 2 * np.pi / pair.tau
    m0 = [(1j * w * n, c) for n, c in pair.g0_modes]

    def rhs(t, Y, sel):
        g0 = np.zeros(t.shape, complex)
        for a, c in m0:
            g0 += c * np.exp(a * t)
        k = ks[sel]
        out = np.empty_like(Y)
        psi, dpsi = Y[:, :2], Y[:, 2:]
        out[:, :2] = base(t, psi, sel)
        dd = (4j * k)[:, None]
        out[:, 2:] = base(t, dpsi, sel)
        out[:, 2, :] += -dd * psi[:, 0, :] + (2 * g0)[:, None] * psi[:, 1, :]
        out[:, 3, :] += (2 * pair.lam * np.conj(g0))[:, None] * psi[:, 0, :] + dd * psi[:, 1, :]
        return out

    return rhs


def monodromy_dk(pair: PeriodicPair, k, tol: float = DEFAULT_TOL):
    """``(Z, dZ/dk)`` from the variational equation, for 1-D ``k``."""
    ks = np.atleast_1d(np.asarray(k, complex))
    Y0 = np.zeros((ks.size, 4, 2), complex)
    Y0[:, 0, 0] = Y0[:, 1, 1] = 1
    lt = ODE_SAFETY * tol
    res = solve_matrix_ode_batch(_tpart_rhs_dk(pair, ks), 0.0, pair.tau, Y0, lt, lt, method=ODE_METHOD)
    return res.Y[:, :2], res.Y[:, 2:]


def propagate(pair: PeriodicPair, k, t, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Fundamental solution ``psi(t, k)`` with ``psi(0, k) = I``.

    ``k`` and ``t`` broadcast together; the result has shape
    ``broadcast_shape + (2, 2)``.
    """
    kb, tb = np.broadcast_arrays(np.asarray(k, complex), np.asarray(t, float))
    shape = kb.shape
    ks, ts = kb.ravel(), tb.ravel()
    if np.any(ts < 0):
        raise ValueError("t must be >= 0")
    Y0 = np.broadcast_to(np.eye(2, dtype=complex), (ks.size, 2, 2))
    lt = ODE_SAFETY * tol
    res = solve_matrix_ode_batch(_tpart_rhs(pair, ks), 0.0, ts, Y0, lt, lt, method=ODE_METHOD)
    return res.Y.reshape(shape + (2, 2))


def monodromy(pair: PeriodicPair, k, tol: float = DEFAULT_TOL, check_det: bool = True) -> np.ndarray:
    """``Z(k) = psi(tau, k)`` for scalar or array ``k``.

    The unit-determinant check is scaled by ``max(1, |Z|^2)`` because the
    determinant of a matrix with entries of size ``e^{g}`` cannot be resolved
    better than ``eps * e^{2g}``.
    """
    Z = propagate(pair, k, pair.tau, tol)
    if check_det:
        scale = np.maximum(1.0, np.abs(Z).max(axis=(-2, -1)) ** 2)
        drift = np.abs(det2(Z) - 1) / scale
        if np.any(drift > 10 * tol + 1e-13):
            raise DeterminantDrift(f"|det Z - 1| too large (max scaled drift {drift.max():.2e})")
    return Z


def _eigs(tr, s):
    """Eigenvalue ``(tr - s)/2`` computed without cancellation."""
    za = (tr - s) / 2
    zb = (tr + s) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(za) >= np.abs(zb), za, 1 / zb)


def discriminant(Z, tau: float, sqrtG=None, logz=None):
    """Return ``(G, z, OmegaTilde)`` for monodromy matrices ``Z``.

    Without ``sqrtG`` the principal square root is used (raw branch); without
    ``logz`` the principal logarithm is used.
    """
    Z = np.asarray(Z, complex)
    tr = Z[..., 0, 0] + Z[..., 1, 1]
    G = tr**2 - 4
    s = np.sqrt(G) if sqrtG is None else np.asarray(sqrtG, complex)
    z = _eigs(tr, s)
    L = np.log(z) if logz is None else np.asarray(logz, complex)
    Om = -L / (1j * tau)
    if np.ndim(G) == 0:
        return complex(G), complex(z), complex(Om)
    return G, z, Om


def diagonalizer(Z, sqrtG, bp_tol: float = 1e-9):
    """``S^b`` with ``Z = S^b diag(z, 1/z) S^b^{-1}`` and ``det S^b = 1``.

    ``D = Z11 - Z22 - sqrtG`` is replaced by ``-4 Z12 Z21 / (Z11 - Z22 + sqrtG)``
    when the direct difference cancels. The scalar prefactor uses the
    principal square root.

    Raises BranchPointProximity when ``sqrtG`` or ``D`` is negligible
    relative to the size of ``Z`` (k within tolerance of a branch point).
    """
    Z = np.asarray(Z, complex)
    s = np.asarray(sqrtG, complex)
    scale = np.maximum(1.0, np.abs(Z).max(axis=(-2, -1)))
    d = Z[..., 0, 0] - Z[..., 1, 1]
    Dm, Dp = d - s, d + s
    with np.errstate(divide="ignore", invalid="ignore"):
        D = np.where(np.abs(Dm) >= np.abs(Dp), Dm, -4 * Z[..., 0, 1] * Z[..., 1, 0] / Dp)
    if np.any(np.abs(s) < bp_tol * scale) or np.any(~np.isfinite(D)) or np.any(np.abs(D) < bp_tol * scale):
        raise BranchPointProximity("k is within tolerance of a branch point")
    pref = np.sqrt(-D / (2 * s))
    S = np.empty(Z.shape, dtype=complex)
    S[..., 0, 0] = pref
    S[..., 1, 1] = pref
    S[..., 0, 1] = -2 * Z[..., 0, 1] / D * pref
    S[..., 1, 0] = 2 * Z[..., 1, 0] / D * pref
    return S


@dataclass
class FloquetPoint:
    k: complex
    Z: np.ndarray
    G: complex
    sqrtG: complex
    z: complex
    OmegaTilde: complex
    Sb: np.ndarray | None
    branch_anchored: bool
    logz: complex = 0j


@dataclass
class BranchValue:
    """Branch data at a target point with the continuation provenance."""

    k: complex
    sqrtG: complex
    z: complex
    logz: complex
    OmegaTilde: complex
    Z: np.ndarray
    anchor: complex
    n_path_points: int
    reflected: bool = False


@dataclass
class BackgroundFrame:
    t: float
    psi: np.ndarray
    P: np.ndarray
    E: np.ndarray
    psi_b: np.ndarray


# ---------------------------------------------------------------------------
# Branch continuation


def anchor_point(pair: PeriodicPair, radius_of_interest: float) -> complex:
    """First-quadrant anchor ``R e^{i pi/8}`` outside the region of interest.

    ``R`` is capped so that ``2 Im(k^2) tau <= MAX_GROWTH``.
    """
    R = 1.25 * radius_of_interest + 1.0
    R_cap = np.sqrt(MAX_GROWTH / (2 * np.sin(2 * ANCHOR_ARG) * pair.tau))
    return complex(min(R, R_cap) * np.exp(1j * ANCHOR_ARG))


@lru_cache(maxsize=256)
def _anchor_values(pair: PeriodicPair, kA: complex, tol: float):
    Z = monodromy(pair, kA, tol)
    tr = Z[0, 0] + Z[1, 1]
    s = np.sqrt(tr**2 - 4)
    ref = 2j * np.sin(2 * kA**2 * pair.tau)
    if abs(-s - ref) < abs(s - ref):
        s = -s
    z = _eigs(tr, s)
    L = np.log(z)
    target = -2j * kA**2 * pair.tau
    m = np.round((target.imag - L.imag) / (2 * np.pi))
    L = L + 2j * np.pi * m
    return complex(s), complex(L), Z


def _segment_detours(a: complex, b: complex, avoid, r: float) -> np.ndarray:
    """Waypoints from ``a`` to ``b`` detouring around ``avoid`` by arcs of radius ``r``."""
    d = b - a
    L = abs(d)
    if L == 0:
        return np.array([a, b])
    u = d / L
    hits = []
    for p in avoid:
        p = complex(p)
        if abs(p - b) < r:
            raise PathBlocked(f"target {b} lies within {r:g} of avoided point {p}")
        proj = ((p - a) * np.conj(u)).real
        dist = abs(((p - a) * np.conj(u)).imag)
        if dist < r and 0 < proj < L:
            hits.append((proj, p))
    hits.sort(key=lambda h: h[0])
    pts = [a]
    last = 0.0
    for proj, p in hits:
        off = ((p - a) * np.conj(u)).imag
        half = np.sqrt(max(r**2 - off**2, 0.0))
        t_in, t_out = proj - half, proj + half
        if t_in < last:
            raise PathBlocked("avoided points are too close together for a detour")
        q_in, q_out = a + t_in * u, a + t_out * u
        th_in = np.angle(q_in - p)
        th_out = np.angle(q_out - p)
        # Pass on the left of the travel direction.
        dth = np.mod(th_out - th_in, 2 * np.pi)
        mid = np.exp(1j * (th_in + dth / 2))
        if (mid * np.conj(u)).imag < 0:
            dth -= 2 * np.pi
        arc = p + r * np.exp(1j * (th_in + dth * np.linspace(0, 1, 17)))
        pts.extend(arc.tolist())
        last = t_out
    pts.append(b)
    return np.array(pts)


def _densify(waypoints: np.ndarray, h: float) -> np.ndarray:
    out = [waypoints[:1]]
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        n = max(1, int(np.ceil(abs(b - a) / h)))
        out.append(a + (b - a) * np.arange(1, n + 1) / n)
    return np.concatenate(out)


def _phase_densify(pts: np.ndarray, tau: float, max_phase: float = 1.0) -> np.ndarray:
    """Subdivide so ``2 k^2 tau`` moves by at most ``max_phase`` per step.

    Angle tests on sqrtG alias once it turns by a full period between two
    vertices, so the step is bounded a priori by the leading asymptotics.
    """
    out = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = int(np.ceil(4 * max(abs(a), abs(b), 0.5) * tau * abs(b - a) / max_phase))
        if n > 1:
            out.append(a + (b - a) * np.arange(1, n) / n)
        out.append(np.array([b]))
    return np.concatenate(out)


def continue_branch(
    pair: PeriodicPair,
    path: np.ndarray,
    s0: complex,
    L0: complex,
    tol: float = DEFAULT_TOL,
    Z0: np.ndarray | None = None,
    max_rounds: int = 40,
):
    """Transport ``(sqrtG, log z)`` along a polyline ``path`` starting at ``path[0]``.

    Segments are bisected until consecutive ``sqrtG`` values differ by at most
    50% of their magnitude, ``G`` turns by less than ``pi/2``, consecutive
    multipliers by a phase below ``pi/2``, and each step is at most half the
    Newton distance ``2|G/G'|`` to a double zero of ``G`` at either end.
    The last test is the one that matters near even zeros: passing one
    between two vertices turns ``G`` by almost exactly ``2 pi``, which no
    sample-based angle test can see, and flips the sign of ``sqrtG``.
    Returns ``(points, sqrtG, logz, Z)`` at every (refined) vertex.
    """
    pts = _phase_densify(np.asarray(path, complex), pair.tau)
    Z, dZ = monodromy_dk(pair, pts, tol)
    if Z0 is not None:
        Z[0] = Z0
    for _ in range(max_rounds):
        tr = Z[:, 0, 0] + Z[:, 1, 1]
        sp = np.sqrt(tr**2 - 4)
        mag = np.abs(sp)
        scale = np.maximum(1.0, np.abs(tr))
        if np.any(mag[1:] < 1e-12 * scale[1:]):
            raise ContinuationAmbiguous("path passes through a zero of G")
        r = np.sign(np.real(sp[1:] * np.conj(sp[:-1])))
        r[r == 0] = 1
        first = 1.0 if abs(sp[0] - s0) <= abs(sp[0] + s0) else -1.0
        eps = first * np.concatenate([[1.0], np.cumprod(r)])
        s = sp * eps
        z = _eigs(tr, s)
        jump = np.abs(np.diff(s)) > 0.5 * np.maximum(np.abs(s[1:]), np.abs(s[:-1]))
        ph = np.abs(np.angle(z[1:] / z[:-1])) >= np.pi / 2
        # the sign choice hides rotations of sqrtG beyond pi/2; G itself is sign-free
        G = sp * sp
        rot = np.abs(np.angle(G[1:] / G[:-1])) >= np.pi / 2
        dG = 2 * tr * (dZ[:, 0, 0] + dZ[:, 1, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            reach = np.where(np.abs(dG) > 0, np.abs(G / dG), np.inf)
        near = np.abs(np.diff(pts)) > np.minimum(reach[1:], reach[:-1])
        bad = np.nonzero(jump | ph | rot | near)[0]
        if bad.size == 0:
            steps = np.log(z[1:] / z[:-1])
            L = np.concatenate([[L0], L0 + np.cumsum(steps)])
            return pts, s, L, Z
        seglen = np.abs(pts[bad + 1] - pts[bad])
        if np.any(seglen < 1e-12):
            raise ContinuationAmbiguous("continuation step underflow")
        mids = 0.5 * (pts[bad] + pts[bad + 1])
        Zm, dZm = monodromy_dk(pair, mids, tol)
        pts = np.insert(pts, bad + 1, mids)
        Z = np.insert(Z, bad + 1, Zm, axis=0)
        dZ = np.insert(dZ, bad + 1, dZm, axis=0)
    raise ContinuationAmbiguous("continuation did not converge")


def _branch_upper(pair, k_target, avoid, radius, path_tol, tol):
    kA = anchor_point(pair, max(radius, abs(k_target)))
    s0, L0, ZA = _anchor_values(pair, kA, tol)
    way = _segment_detours(kA, complex(k_target), avoid, 3 * path_tol)
    h = max(abs(k_target - kA) / 64, 1e-3)
    path = _densify(way, min(h, 0.1))
    pts, s, L, Z = continue_branch(pair, path, s0, L0, tol, Z0=ZA)
    return kA, pts, s, L, Z


def anchored_branch(
    pair: PeriodicPair,
    k_target: complex,
    avoid=(),
    radius: float | None = None,
    path_tol: float = 1e-3,
    tol: float = DEFAULT_TOL,
) -> BranchValue:
    """Branch values at ``k_target`` continued from the large-|k| anchor.

    Lower half-plane targets are evaluated at the mirror point and mapped by
    ``sqrtG(k) = -conj(sqrtG(conj k))`` and ``log z(k) = -conj(log z(conj k))``,
    which keeps the induced cut system conjugation invariant.
    """
    k_target = complex(k_target)
    radius = abs(k_target) if radius is None else radius
    reflected = k_target.imag < 0
    kt = k_target.conjugate() if reflected else k_target
    av = [complex(p).conjugate() if complex(p).imag < 0 else complex(p) for p in avoid]
    kA, pts, s, L, Z = _branch_upper(pair, kt, av, radius, path_tol, tol)
    sv, Lv, Zv = complex(s[-1]), complex(L[-1]), Z[-1]
    if reflected:
        sv, Lv = -sv.conjugate(), -Lv.conjugate()
        Zv = monodromy(pair, k_target, tol)
    z = complex(np.exp(Lv))
    return BranchValue(
        k=k_target,
        sqrtG=sv,
        z=z,
        logz=Lv,
        OmegaTilde=complex(-Lv / (1j * pair.tau)),
        Z=Zv,
        anchor=kA,
        n_path_points=len(pts),
        reflected=reflected,
    )


def floquet_point(
    pair: PeriodicPair,
    k: complex,
    tol: float = DEFAULT_TOL,
    anchored: bool = True,
    avoid=(),
    radius: float | None = None,
) -> FloquetPoint:
    """All Floquet quantities at one ``k`` with explicit branch provenance."""
    if anchored:
        bv = anchored_branch(pair, k, avoid, radius=radius, tol=tol)
        Z, s, L = bv.Z, bv.sqrtG, bv.logz
    else:
        Z = monodromy(pair, k, tol)
        tr = Z[0, 0] + Z[1, 1]
        s = complex(np.sqrt(tr**2 - 4))
        L = complex(np.log(_eigs(tr, s)))
    G, z, Om = discriminant(Z, pair.tau, s, L)
    try:
        Sb = diagonalizer(Z, s)
    except BranchPointProximity:
        Sb = None
    return FloquetPoint(complex(k), Z, G, complex(s), z, Om, Sb, anchored, complex(L))


def background_eigenfunction(
    pair: PeriodicPair,
    t,
    k: complex,
    tol: float = DEFAULT_TOL,
    branch: BranchValue | None = None,
):
    """``psi``, ``P``, ``E`` and ``psi^b`` at time(s) ``t``.

    ``P = psi e^{-tB}`` with ``e^{-tB} = S^b diag(e^{it Om}, e^{-it Om}) S^b^{-1}``
    where ``it Om = -t log(z)/tau``. Returns a BackgroundFrame for scalar
    ``t`` and a list of frames for array ``t``.
    """
    if branch is None:
        branch = anchored_branch(pair, k, tol=tol)
    S = diagonalizer(branch.Z, branch.sqrtG)
    Sinv = inv2(S)
    ts = np.atleast_1d(np.asarray(t, float))
    psi = propagate(pair, np.full(ts.shape, complex(k)), ts, tol)
    e = np.exp(-ts * branch.logz / pair.tau)
    D = np.zeros((ts.size, 2, 2), complex)
    D[:, 0, 0] = e
    D[:, 1, 1] = 1 / e
    expmB = S @ D @ Sinv
    P = psi @ expmB
    E = P @ S
    psib = psi @ S
    frames = [BackgroundFrame(float(tt), psi[i], P[i], E[i], psib[i]) for i, tt in enumerate(ts)]
    return frames[0] if np.ndim(t) == 0 else frames


def tpart_residual(pair: PeriodicPair, k: complex, t: float, psib_fn, h: float = 1e-4) -> float:
    """Central-difference residual of ``psi_t + 2ik^2 sigma3 psi - V^b psi``."""
    from .background import assemble_Vb

    dpsi = (psib_fn(t + h) - psib_fn(t - h)) / (2 * h)
    Y = psib_fn(t)
    R = dpsi + 2j * k**2 * SIGMA3 @ Y - assemble_Vb(pair, t, k) @ Y
    return float(np.abs(R).max() / max(1.0, np.abs(Y).max()))


# ---------------------------------------------------------------------------
# Large-k validation


@dataclass
class AsymptoticsReport:
    rays: list
    radii: list
    ratio: np.ndarray  # |G + 4 sin^2| * |k| / envelope, shape (rays, radii)
    coef_ratio: np.ndarray  # 1/k coefficient against -8 eta1 cos sin
    eta1_tau: float
    status: str
    notes: list = field(default_factory=list)


def check_asymptotics(pair: PeriodicPair, rays, radii, tol: float = 1e-12) -> AsymptoticsReport:
    """Compare ``G`` with its large-k expansion along rays.

    ``ratio`` is ``|G + 4 sin^2(2k^2 tau)| |k|`` divided by the envelope
    ``1 + |e^{4ik^2 tau}| + |e^{-4ik^2 tau}|``; it must stay bounded.
    ``coef_ratio`` compares ``k (G + 4 sin^2)`` with
    ``-8 eta1(tau) cos sin`` (NaN when eta1 vanishes).
    """
    rays = list(rays)
    radii = list(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    for th in rays:
        if min(abs(np.sin(th)), abs(np.cos(th))) < np.sin(0.1):
            raise ValueError("rays must avoid the real and imaginary axes by >= 0.1 rad")
    e1 = eta(pair, pair.tau).eta1
    K = np.array([[r * np.exp(1j * th) for r in radii] for th in rays])
    Z = monodromy(pair, K, tol)
    tr = Z[..., 0, 0] + Z[..., 1, 1]
    G = tr**2 - 4
    x = 2 * K**2 * pair.tau
    sn, cs = np.sin(x), np.cos(x)
    resid = G + 4 * sn**2
    env = 1 + np.abs(np.exp(2j * x)) + np.abs(np.exp(-2j * x))
    ratio = np.abs(resid) * np.abs(K) / env
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = resid * K / (-8 * e1 * cs * sn) if abs(e1) > 1e-14 else np.full(K.shape, np.nan)
    grows = np.any(ratio[:, -1] > 2 * ratio[:, 0] + 1e-8)
    return AsymptoticsReport(rays, radii, ratio, coef, e1, "FAIL" if grows else "PASS")
