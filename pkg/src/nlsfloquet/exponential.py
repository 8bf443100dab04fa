"""Single-exponential pairs ``{alpha e^{i omega t}, c e^{i omega t}}``.

Closed-form Floquet data and the classifier that combines the generic
branch-point pipeline with the explicit admissible families.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .background import PeriodicPair, single_exponential_pair
from .floquet import BranchPointProximity, FloquetPoint, monodromy
from .numerics import Contour, NumericsError, Polynomial, poly_roots, winding_number
from . import spectrum

FOCUSING_FAMILIES = ("F-1.3a", "F-1.3b")
DEFOCUSING_FAMILIES = ("D-1", "D-2", "D-3", "D-4", "D-5")
FAMILY_TOL = 1e-9


class FamilySolveFailure(NumericsError):
    pass


@dataclass(frozen=True)
class ExponentialTriple:
    alpha: float
    omega: float
    c: complex
    lam: int

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.omega == 0 or not np.isfinite(self.omega):
            raise ValueError("omega must be finite and nonzero (tau = 2 pi / |omega|)")
        if self.lam not in (1, -1):
            raise ValueError("lambda must be +1 or -1")

    @property
    def tau(self) -> float:
        return 2 * np.pi / abs(self.omega)

    def pair(self) -> PeriodicPair:
        return single_exponential_pair(self.alpha, self.omega, self.c, self.lam)


@dataclass
class FamilyTag:
    name: str
    parameters: dict = field(default_factory=dict)


def omega_squared(tr: ExponentialTriple) -> Polynomial:
    """``Omega^2(k)`` as an ascending-degree quartic."""
    a, w, c, lam = tr.alpha, tr.omega, tr.c, tr.lam
    return Polynomial([(w / 2 + lam * a * a) ** 2 - lam * abs(c) ** 2, 4 * lam * a * c.imag, 2 * w, 0.0, 4.0])


def _omega2_eval(tr: ExponentialTriple, k):
    k = np.asarray(k, complex)
    return omega_squared(tr)(k)


def omega_branch(tr: ExponentialTriple, k):
    """``Omega(k)`` on the sheet nearest to ``2k^2 + omega/2``."""
    k = np.asarray(k, complex)
    W = np.sqrt(_omega2_eval(tr, k))
    ref = 2 * k**2 + tr.omega / 2
    return np.where(np.abs(W - ref) <= np.abs(W + ref), W, -W)


def _sin_over(W2, tau):
    """``sin(Omega tau)/Omega`` and ``cos(Omega tau)`` as entire functions of ``W2 = Omega^2``."""
    W2 = np.asarray(W2, complex)
    x2 = W2 * tau**2
    small = np.abs(x2) < 1e-4
    W = np.sqrt(W2)
    with np.errstate(divide="ignore", invalid="ignore"):
        sinc = np.where(small, 0, np.sin(W * tau) / np.where(small, 1, W))
    series = tau * (1 - x2 / 6 + x2**2 / 120 - x2**3 / 5040)
    sinc = np.where(small, series, sinc)
    cos = np.cos(W * tau)
    return sinc, cos


def closed_form_Z(tr: ExponentialTriple, k):
    """Monodromy ``Z(k)`` from the explicit solution; broadcasts over ``k``."""
    k = np.asarray(k, complex)
    a, w, c, lam, tau = tr.alpha, tr.omega, tr.c, tr.lam, tr.tau
    W2 = _omega2_eval(tr, k)
    sinc, cos = _sin_over(W2, tau)
    q = 4 * k**2 + 2 * lam * a * a + w
    Z = np.empty(k.shape + (2, 2), complex)
    # e^{i omega tau sigma3 / 2} = -I.
    Z[..., 0, 0] = -(cos + q / 2j * sinc)
    Z[..., 1, 1] = -(cos - q / 2j * sinc)
    Z[..., 0, 1] = -(2 * a * k + 1j * c) * sinc
    Z[..., 1, 0] = -lam * (2 * a * k - 1j * np.conj(c)) * sinc
    return Z


def branch_points(tr: ExponentialTriple) -> list[complex]:
    pts = [-1j * tr.c / (2 * tr.alpha), 1j * np.conj(tr.c) / (2 * tr.alpha)]
    pts += [r for r, _ in poly_roots(omega_squared(tr))]
    return [complex(p) for p in pts]


def closed_form_Sb(tr: ExponentialTriple, k, Omega=None):
    """``S^b`` from the ``H = Omega - 2k^2 - lam alpha^2 - omega/2`` form."""
    k = np.asarray(k, complex)
    a, w, c, lam = tr.alpha, tr.omega, tr.c, tr.lam
    W = omega_branch(tr, k) if Omega is None else np.asarray(Omega, complex)
    H = W - 2 * k**2 - lam * a * a - w / 2
    den = 2 * W - H
    pref = np.sqrt(den / (2 * W))
    S = np.empty(k.shape + (2, 2), complex)
    S[..., 0, 0] = pref
    S[..., 1, 1] = pref
    S[..., 0, 1] = pref * (c - 2j * a * k) / den
    S[..., 1, 0] = pref * lam * (np.conj(c) + 2j * a * k) / den
    return S


def closed_form_monodromy(tr: ExponentialTriple, k: complex, Omega: complex | None = None) -> FloquetPoint:
    """All Floquet quantities of a single-exponential pair in closed form.

    ``z = -e^{-i Omega tau}``, ``Omega~ = Omega - omega/2``,
    ``G = -4 sin^2(Omega tau)`` and ``sqrt(G) = -2i sin(Omega tau)``; the sign
    follows from ``z = (tr Z - sqrt(G))/2`` with ``tr Z = -2 cos(Omega tau)``.
    ``Omega`` defaults to :func:`omega_branch`.
    """
    k = complex(k)
    W = complex(omega_branch(tr, k)) if Omega is None else complex(Omega)
    tau = tr.tau
    Z = closed_form_Z(tr, k)
    z = -np.exp(-1j * W * tau)
    sG = -2j * np.sin(W * tau)
    G = -4 * np.sin(W * tau) ** 2
    logz = -1j * W * tau + 1j * np.pi
    try:
        Sb = closed_form_Sb(tr, k, W) if abs(W) > 1e-12 else None
    except ZeroDivisionError:
        Sb = None
    return FloquetPoint(k, Z, complex(G), complex(sG), complex(z), complex(W - tr.omega / 2), Sb, False, complex(logz))


def background_explicit(tr: ExponentialTriple, t, k: complex, Omega=None, bp_tol: float = 1e-8):
    """``psi^b(t,k) = e^{i omega t sigma3/2} S^b(k) e^{-i Omega t sigma3}``."""
    k = complex(k)
    for p in branch_points(tr):
        if abs(k - p) < bp_tol * (1 + abs(k)):
            raise BranchPointProximity(f"k={k} is within tolerance of branch point {p}")
    W = complex(omega_branch(tr, k)) if Omega is None else complex(Omega)
    S = closed_form_Sb(tr, k, W)
    t = np.asarray(t, float)
    L = np.exp(0.5j * tr.omega * t)
    R = np.exp(-1j * W * t)
    out = np.empty(t.shape + (2, 2), complex)
    out[..., 0, 0] = L * S[0, 0] * R
    out[..., 0, 1] = L * S[0, 1] / R
    out[..., 1, 0] = S[1, 0] * R / L
    out[..., 1, 1] = S[1, 1] / (L * R)
    return out


# ---------------------------------------------------------------------------
# Admissible families


def _close(x, y, scale=1.0):
    return abs(x - y) <= FAMILY_TOL * max(1.0, scale)


def _edge(value, bound, notes, label):
    if abs(value - bound) <= FAMILY_TOL * max(1.0, abs(bound)):
        notes.append(f"{label}: within 1e-9 of an inequality boundary")


def _open(lo, x, hi, notes, label):
    """``lo < x < hi`` with hits within tolerance of an open end excluded and noted."""
    for b in (lo, hi):
        if np.isfinite(b) and abs(x - b) <= FAMILY_TOL * max(1.0, abs(b)):
            notes.append(f"{label}: on an open inequality end, excluded")
            return False
    return lo < x < hi


def _kc2_candidates(tr: ExponentialTriple):
    """Positive real K solving ``4K^3 + omega K + alpha c2 = 0``."""
    a, w, c2 = tr.alpha, tr.omega, tr.c.imag
    if c2 == 0:
        return []
    q = a * c2
    disc = -16 * w**3 - 432 * q * q
    if abs(disc) <= 1e-10 * (16 * abs(w) ** 3 + 432 * q * q):
        # double root: np.roots only resolves it to sqrt(eps)
        Kd, Ks = -3 * q / (2 * w), 3 * q / w
        return sorted(x for x in {Kd, Ks} if x > 0)
    r = np.roots([4.0, 0.0, w, q])
    Ks = [float(x.real) for x in r if abs(x.imag) <= 1e-7 * max(1.0, abs(x)) and x.real > 0]
    if not Ks and np.any(np.abs(r.imag) <= 1e-5 * np.maximum(1.0, np.abs(r))):
        raise FamilySolveFailure("ambiguous real root of the (K, c2) cubic")
    return Ks


def family_memberships(tr: ExponentialTriple, notes: list | None = None) -> list[FamilyTag]:
    """All admissible-family predicates that ``tr`` satisfies (tolerance 1e-9)."""
    notes = [] if notes is None else notes
    a, w, c, lam = tr.alpha, tr.omega, tr.c, tr.lam
    tags = []
    sc = max(1.0, abs(c))
    if lam == -1:
        if w >= a * a - FAMILY_TOL:
            r = a * np.sqrt(max(w - a * a, 0.0))
            if _close(c.imag, 0, sc) and (_close(c.real, r, sc) or _close(c.real, -r, sc)):
                _edge(w, a * a, notes, "F-1.3a")
                tags.append(FamilyTag("F-1.3a", {"sign": 1 if c.real >= 0 else -1}))
        if w <= -6 * a * a + FAMILY_TOL:
            if _close(c, 1j * a * np.sqrt(abs(w) + 2 * a * a), sc):
                _edge(w, -6 * a * a, notes, "F-1.3b")
                tags.append(FamilyTag("F-1.3b"))
        return tags

    if -3 * a * a <= w < 0:
        re = np.sqrt((w + 3 * a * a) ** 3 / (27 * a * a))
        im = abs(w) ** 1.5 / (3 * np.sqrt(3) * a)
        if _close(c.imag, im, sc) and (_close(c.real, re, sc) or _close(c.real, -re, sc)):
            _edge(w, -3 * a * a, notes, "D-1")
            tags.append(FamilyTag("D-1", {"sign": 1 if c.real >= 0 else -1}))
    if w < -3 * a * a:
        if _close(c, 1j * a * np.sqrt(-2 * a * a - w), sc):
            tags.append(FamilyTag("D-3"))
    if w + a * a >= 0:
        r = a * np.sqrt(w + a * a)
        if _close(c.imag, 0, sc) and (_close(c.real, r, sc) or _close(c.real, -r, sc)):
            _edge(w, -a * a, notes, "D-4")
            tags.append(FamilyTag("D-4", {"sign": 1 if c.real >= 0 else -1}))
    c2 = c.imag
    for K in _kc2_candidates(tr):
        rad = (a * a + w / 2) ** 2 - c2 * c2 - 2 * K * K * (6 * K * K + w)
        if rad < -FAMILY_TOL * sc**2:
            continue
        if not _close(c.real**2, max(rad, 0.0), sc**2):
            continue
        K2 = K * K
        if _open(-12 * K2, w, -4 * K2, notes, "D-2") and 0 < c2 <= -(4 * K2 + w) / 2 + FAMILY_TOL:
            _edge(c2, -(4 * K2 + w) / 2, notes, "D-2")
            tags.append(FamilyTag("D-2", {"K": K, "c2": c2}))
        if _open(-4 * K2, w, np.inf, notes, "D-5") and w <= -3 * K2 + FAMILY_TOL and -(4 * K2 + w) / 2 - FAMILY_TOL <= c2 < 0:
            _edge(w, -3 * K2, notes, "D-5")
            tags.append(FamilyTag("D-5", {"K": K, "c2": c2}))
    return tags


def family_tag(tr: ExponentialTriple, notes: list | None = None) -> FamilyTag:
    tags = family_memberships(tr, notes)
    names = sorted({t.name for t in tags})
    if len(names) > 1:
        raise FamilySolveFailure(f"triple matches several families: {names}")
    return tags[0] if tags else FamilyTag("none")


# Family generators (inverse direction, used by tests and scripts).


def family_triple(name: str, **p) -> ExponentialTriple:
    """A triple on the named family; parameters per family.

    F-1.3a: alpha, omega, sign. F-1.3b: alpha, omega. D-1: alpha, omega, sign.
    D-2, D-5: K, omega, c2, sign. D-3: alpha, omega. D-4: alpha, omega, sign.
    """
    s = p.get("sign", 1)
    if name == "F-1.3a":
        a, w = p["alpha"], p["omega"]
        return ExponentialTriple(a, w, s * a * np.sqrt(w - a * a), -1)
    if name == "F-1.3b":
        a, w = p["alpha"], p["omega"]
        return ExponentialTriple(a, w, 1j * a * np.sqrt(abs(w) + 2 * a * a), -1)
    if name == "D-1":
        a, w = p["alpha"], p["omega"]
        c = s * np.sqrt((w + 3 * a * a) ** 3 / (27 * a * a)) + 1j * abs(w) ** 1.5 / (3 * np.sqrt(3) * a)
        return ExponentialTriple(a, w, c, 1)
    if name in ("D-2", "D-5"):
        K, w, c2 = p["K"], p["omega"], p["c2"]
        a = -(4 * K**3 + w * K) / c2
        rad = (a * a + w / 2) ** 2 - c2 * c2 - 2 * K * K * (6 * K * K + w)
        return ExponentialTriple(a, w, s * np.sqrt(rad) + 1j * c2, 1)
    if name == "D-3":
        a, w = p["alpha"], p["omega"]
        return ExponentialTriple(a, w, 1j * a * np.sqrt(-2 * a * a - w), 1)
    if name == "D-4":
        a, w = p["alpha"], p["omega"]
        return ExponentialTriple(a, w, s * a * np.sqrt(w + a * a), 1)
    raise ValueError(f"unknown family {name}")


def window_radius(tr: ExponentialTriple) -> float:
    """Fujiwara bound on the roots of ``Omega^2`` plus a unit margin."""
    c = np.array(omega_squared(tr).coefficients)
    n = 4
    lead = abs(c[n])
    terms = [abs(c[n - j] / lead) ** (1.0 / j) for j in range(1, n)]
    terms.append(abs(c[0] / (2 * lead)) ** (1.0 / n))
    return 2 * max(terms) + 1.0


# ---------------------------------------------------------------------------
# Classification


def odd_branch_points(tr: ExponentialTriple, cluster_tol: float = 1e-4):
    """Roots of ``Omega^2`` with multiplicities; the odd ones are the odd zeros of ``G``.

    ``cluster_tol`` is loose because a triple root of a quartic splits by
    about ``eps^(1/3)`` in floating point.
    """
    return poly_roots(omega_squared(tr), cluster_tol=cluster_tol)


def _g_winding(pair: PeriodicPair, root: complex, roots, tol: float) -> int:
    others = [abs(root - r) for r, _ in roots if abs(root - r) > 1e-9]
    rho = min([0.05] + [0.4 * d for d in others])

    def G(k):
        Z = monodromy(pair, k, tol)
        return (Z[:, 0, 0] + Z[:, 1, 1]) ** 2 - 4

    return winding_number(G, Contour.circle(root, rho), 64, 1e-13)


def classify_triple(
    tr: ExponentialTriple,
    cut_strategies=spectrum.CUT_STRATEGIES,
    full_scan: bool = False,
    tol: float = 1e-10,
):
    """Consistency verdict from the generic pipeline plus the family tag.

    The verdict comes from branch-point classification of the odd roots of
    ``Omega^2`` (each confirmed as an odd zero of the numerically computed
    ``G``). The family tag is evaluated independently; disagreement between
    the two is reported as a ClassifierMismatch note.
    """
    pair = tr.pair()
    notes: list = []
    roots = odd_branch_points(tr)
    zeros = []
    for r, m in roots:
        rec = spectrum.ZeroRecord(complex(r), m, "G-zero", spectrum.half_plane_of(complex(r), 1e-9))
        if rec.half_plane == "real-axis":
            rec.location = complex(r.real, 0.0)
        if m % 2:
            try:
                w = _g_winding(pair, rec.location, roots, tol)
            except NumericsError as exc:
                w = None
                notes.append(f"winding check failed at {rec.location:.6g}: {exc}")
            if w is not None and w % 2 != m % 2:
                notes.append(f"G winding {w} around {rec.location:.6g} disagrees with Omega^2 multiplicity {m}")
        zeros.append(rec)
    R = window_radius(tr)
    window = (-R, R, -R, R)
    verdict = spectrum.consistency_verdict(pair, window, cut_strategies, zeros=zeros)
    if full_scan:
        scan = spectrum.consistency_verdict(pair, window, cut_strategies)
        if scan.status != verdict.status:
            notes.append(f"full scan verdict {scan.status} differs from branch-point verdict {verdict.status}")
    try:
        tag = family_tag(tr, notes)
    except FamilySolveFailure as exc:
        tag = FamilyTag("undecided")
        notes.append(str(exc))
    expected = "consistent" if tag.name not in ("none", "undecided") else "inconsistent"
    if tag.name != "undecided" and verdict.status != "undecided" and verdict.status != expected:
        notes.append(f"ClassifierMismatch: pipeline says {verdict.status}, family tag is {tag.name}")
    verdict.notes.extend(notes)
    return verdict, tag
