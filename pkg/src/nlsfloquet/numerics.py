"""Numerical kernels: batched 2x2 matrix ODE integration, polynomial roots,
and argument-principle winding numbers.

Conventions
-----------
Complex scalars are plain Python/NumPy ``complex`` values. A ``Matrix2`` is a
NumPy array of shape ``(2, 2)``; batched routines use ``(n, 2, 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _dop853


class NumericsError(RuntimeError):
    """Base class for numerical failures (mapped to CLI exit code 3)."""


class StepUnderflow(NumericsError):
    pass


class NonFinite(NumericsError):
    pass


class DegenerateLeadingCoefficient(NumericsError):
    pass


class ZeroOnContour(NumericsError):
    pass


class PhaseJump(NumericsError):
    pass


SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class ODEResult:
    """Final states of a batched integration plus step statistics."""

    Y: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    steps_per_item: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


BatchRHS = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class _Tableau:
    name: str
    A: list  # row s holds the s coefficients of stage s
    C: np.ndarray
    B: np.ndarray
    order: int  # exponent used in step-size control is -1/(order+1)
    E: np.ndarray | None = None  # error weights over the stages plus the FSAL stage
    E5: np.ndarray | None = None
    E3: np.ndarray | None = None


def _tableaus():
    d8 = _dop853
    dp = _Tableau("dp54", [np.array(r, float) for r in _A[:6]], _C[:6], _B5[:6], 4, E=_E)
    d8t = _Tableau(
        "dop853",
        [np.array(r, float) for r in d8.A],
        np.array(d8.C),
        np.array(d8.B),
        7,
        E5=np.array(d8.E5),
        E3=np.array(d8.E3),
    )
    return {"dp54": dp, "dop853": d8t}


def _norm(Y: np.ndarray) -> np.ndarray:
    return np.abs(Y).reshape(Y.shape[0], -1).max(axis=1)


def solve_matrix_ode_batch(
    rhs: BatchRHS,
    t0: float,
    t1,
    Y0: np.ndarray,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-10,
    method: str = "dp54",
    max_steps: int = 200_000,
) -> ODEResult:
    """Integrate ``Y' = rhs(t, Y, sel)`` for a batch of independent matrices.

    Every batch member carries its own time and step size, so members with
    slowly varying solutions finish in few steps while oscillatory ones refine.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, Y, sel)`` with ``t`` of shape ``(m,)``, ``Y`` of shape
        ``(m, p, q)`` and ``sel`` the integer indices of the batch members
        being advanced. Must return an array shaped like ``Y``.
    t0 : float
        Common start time.
    t1 : float or array of shape (n,)
        End time(s), each ``>= t0``.
    Y0 : ndarray, shape (n, p, q)
        Initial values.
    abs_tol, rel_tol : float
        Local error control. The error of a step is measured in the max norm
        relative to ``abs_tol + rel_tol * max|Y|`` of that member.
    method : {"dp54", "dop853"}
        Embedded pair: Dormand-Prince 5(4) or the 8(5,3) pair, whose higher
        order pays off on strongly oscillatory solutions.

    Returns
    -------
    ODEResult
    """
    if abs_tol <= 0 or rel_tol <= 0:
        raise ValueError("tolerances must be positive")
    tab = _TABLEAUS[method]
    Y = np.array(Y0, dtype=complex, copy=True)
    n = Y.shape[0]
    T1 = np.broadcast_to(np.asarray(t1, dtype=float), (n,)).copy()
    if np.any(T1 < t0):
        raise ValueError("t1 must be >= t0")
    span = T1 - t0
    t = np.full(n, float(t0))
    res = ODEResult(Y=Y, steps_per_item=np.zeros(n, dtype=int))
    active = span > 0
    if not active.any():
        return res

    idx = np.nonzero(active)[0]
    K1 = np.zeros_like(Y)
    K1[idx] = _checked(rhs(t[idx], Y[idx], idx))
    res.n_rhs += 1

    d0 = _norm(Y[idx])
    d1 = _norm(K1[idx])
    h = np.zeros(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        h0 = np.where((d0 > 1e-5) & (d1 > 1e-5), 0.01 * d0 / d1, 1e-3 * span[idx])
    h[idx] = np.minimum(np.maximum(h0, 1e-6 * span[idx]), span[idx])
    floor = 1e-14 * span
    expo = -1.0 / (tab.order + 1)
    n_st = len(tab.A)
    stride = int(np.prod(Y.shape[1:]))

    while active.any():
        idx = np.nonzero(active)[0]
        ti, yi = t[idx], Y[idx]
        hi = np.minimum(h[idx], T1[idx] - ti)
        hb = hi[:, None, None]
        m = idx.size
        K = np.empty((n_st + 1, m * stride), complex)
        K[0] = K1[idx].reshape(-1)
        for s in range(1, n_st):
            acc = (tab.A[s][:s] @ K[:s]).reshape(yi.shape)
            K[s] = rhs(ti + tab.C[s] * hi, yi + hb * acc, idx).reshape(-1)
        y_new = _checked(yi + hb * (tab.B @ K[:n_st]).reshape(yi.shape))
        k_last = _checked(rhs(ti + hi, y_new, idx))
        K[n_st] = k_last.reshape(-1)
        res.n_rhs += n_st
        scale = abs_tol + rel_tol * np.maximum(_norm(yi), _norm(y_new))
        if tab.name == "dp54":
            err = hi * _norm((tab.E @ K).reshape(yi.shape)) / scale
        else:
            e5 = _norm((tab.E5 @ K).reshape(yi.shape)) / scale
            e3 = _norm((tab.E3 @ K).reshape(yi.shape)) / scale
            with np.errstate(divide="ignore", invalid="ignore"):
                den = np.sqrt(e5**2 + 0.01 * e3**2)
                err = np.where(den > 0, hi * e5**2 / den, 0.0)
        ok = err <= 1.0
        with np.errstate(divide="ignore"):
            fac = np.where(err > 0, 0.9 * err**expo, 5.0)
        fac = np.clip(fac, 0.2, 5.0)
        acc_idx = idx[ok]
        if acc_idx.size:
            Y[acc_idx] = y_new[ok]
            t[acc_idx] = ti[ok] + hi[ok]
            K1[acc_idx] = k_last[ok]
            res.steps_per_item[acc_idx] += 1
            res.n_steps += int(acc_idx.size)
            done = T1[acc_idx] - t[acc_idx] <= 1e-15 * np.maximum(1.0, np.abs(T1[acc_idx]))
            t[acc_idx[done]] = T1[acc_idx[done]]
            active[acc_idx[done]] = False
        res.n_rejected += int((~ok).sum())
        h[idx] = hi * np.where(ok, fac, np.minimum(fac, 0.5))
        bad = active[idx] & (h[idx] < floor[idx])
        if bad.any():
            raise StepUnderflow(
                f"step below 1e-14*(t1-t0) for {int(bad.sum())} batch member(s)"
            )
        if res.steps_per_item.max() > max_steps:
            raise StepUnderflow("maximum number of steps exceeded")
    res.Y = Y
    return res


def _checked(F: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(F)):
        raise NonFinite("right-hand side produced NaN or Inf")
    return F


_TABLEAUS = _tableaus()


def solve_matrix_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    Y0: np.ndarray,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-10,
    method: str = "dp54",
) -> np.ndarray:
    """Single-matrix convenience wrapper around :func:`solve_matrix_ode_batch`."""

    def batched(t, Y, sel):
        return np.stack([rhs(float(tt), yy) for tt, yy in zip(t, Y)])

    out = solve_matrix_ode_batch(
        batched, t0, t1, np.asarray(Y0, complex)[None], abs_tol, rel_tol, method
    )
    return out.Y[0]


# ---------------------------------------------------------------------------
# Polynomials


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with complex coefficients in ascending degree order."""

    coefficients: tuple

    def __init__(self, coefficients):
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polyval(np.array(self.coefficients[::-1]), x)

    def normalized(self) -> "Polynomial":
        c = list(self.coefficients)
        while len(c) > 1 and abs(c[-1]) < 1e-300:
            c.pop()
        return Polynomial(c)


def _cluster(points: np.ndarray, tol_fn) -> list[list[int]]:
    """Single-linkage clusters of ``points`` with pairwise threshold ``tol_fn(a, b)``."""
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(points[i] - points[j]) <= tol_fn(points[i], points[j]):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def poly_roots(p: Polynomial, cluster_tol: float | None = None) -> list[tuple[complex, int]]:
    """Roots with multiplicities of a polynomial.

    Companion-matrix eigenvalues (via ``numpy.roots``), merged into clusters
    whose members lie within ``cluster_tol`` of each other (default
    ``1e-6 * (1 + |root|)``). Clusters of size one get a single Newton
    polish; larger clusters report their centroid, which cancels the
    first-order splitting of a perturbed multiple root.

    Returns a list of ``(root, multiplicity)`` sorted by (real, imag).
    """
    coeffs = np.array(p.coefficients, dtype=complex)
    if coeffs.size < 2:
        raise ValueError("degree must be at least 1")
    if abs(coeffs[-1]) < 1e-300:
        raise DegenerateLeadingCoefficient("leading coefficient is (numerically) zero")
    desc = coeffs[::-1]
    raw = np.roots(desc)
    if cluster_tol is None:
        tol_fn = lambda a, b: 1e-6 * (1 + max(abs(a), abs(b)))
    else:
        tol_fn = lambda a, b: cluster_tol
    out = []
    dp = np.polyder(desc)
    for group in _cluster(raw, tol_fn):
        members = raw[group]
        r = complex(members.mean())
        if len(group) == 1:
            d = np.polyval(dp, r)
            if d != 0:
                cand = r - np.polyval(desc, r) / d
                if abs(np.polyval(desc, cand)) <= abs(np.polyval(desc, r)):
                    r = complex(cand)
        out.append((r, len(group)))
    out.sort(key=lambda rm: (round(rm[0].real, 12), round(rm[0].imag, 12)))
    return out


# ---------------------------------------------------------------------------
# Contours and winding numbers


@dataclass(frozen=True)
class Contour:
    """Closed contour parametrized on s in [0, 1).

    ``kind`` is ``"circle"`` (params: center, radius) or ``"polyline"``
    (params: vertices; the closing edge is implicit).
    """

    kind: str
    params: tuple

    @staticmethod
    def circle(center: complex, radius: float) -> "Contour":
        return Contour("circle", (complex(center), float(radius)))

    @staticmethod
    def polyline(vertices) -> "Contour":
        return Contour("polyline", tuple(complex(v) for v in vertices))

    @staticmethod
    def rectangle(x0: float, x1: float, y0: float, y1: float) -> "Contour":
        return Contour.polyline([complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)])

    def at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            c, r = self.params
            return c + r * np.exp(2j * np.pi * s)
        v = np.array(self.params + self.params[:1])
        seg = np.abs(np.diff(v))
        cum = np.concatenate([[0.0], np.cumsum(seg)]) / seg.sum()
        j = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        frac = (s - cum[j]) / (cum[j + 1] - cum[j])
        return v[j] + frac * (v[j + 1] - v[j])

    def base_parameters(self, n_samples: int) -> np.ndarray:
        """Uniform samples that always include polyline vertices."""
        s = np.linspace(0.0, 1.0, n_samples, endpoint=False)
        if self.kind == "polyline":
            v = np.array(self.params + self.params[:1])
            seg = np.abs(np.diff(v))
            cum = np.concatenate([[0.0], np.cumsum(seg)]) / seg.sum()
            s = np.union1d(s, cum[:-1])
        return s


def winding_numbers(
    f: Callable[[np.ndarray], np.ndarray],
    contours: list[Contour],
    n_samples: int = 64,
    floor: float = 1e-12,
    max_refine: int = 40,
    max_points: int = 200_000,
) -> list[int]:
    """Winding numbers of ``f`` around several contours, refined jointly.

    ``f`` must be vectorized over complex arrays; all contours' sample points
    are evaluated in one call per refinement sweep. Segments whose phase
    increment is ``>= pi/2`` are bisected until every increment is below
    ``pi/2``. Segments beside a sharp local minimum of ``|f|`` (below half of
    both outer neighbours) are bisected too: a zero much closer to the
    contour than the sample spacing turns the phase by a multiple of ``2 pi``
    between two samples, which the increment test alone cannot see.

    Raises
    ------
    ZeroOnContour
        If ``|f| < floor`` at any sample.
    PhaseJump
        If refinement fails to bound increments within ``max_refine`` sweeps.
    """
    ns = [n_samples] * len(contours) if np.ndim(n_samples) == 0 else list(n_samples)
    if min(ns, default=64) < 64:
        raise ValueError("n_samples must be >= 64")
    S = [c.base_parameters(int(n)) for c, n in zip(contours, ns)]
    pts = np.concatenate([c.at(s) for c, s in zip(contours, S)])
    vals = np.asarray(f(pts), dtype=complex)
    F = []
    pos = 0
    for s in S:
        F.append(vals[pos : pos + len(s)])
        pos += len(s)
    result = [None] * len(contours)
    pending = list(range(len(contours)))
    for _ in range(max_refine + 1):
        new_s = {}
        for i in pending:
            fi = F[i]
            if np.any(~np.isfinite(fi)):
                raise NonFinite("non-finite function value on contour")
            if np.min(np.abs(fi)) < floor:
                raise ZeroOnContour(f"|f| below floor {floor:g} on contour {i}")
            d = np.angle(np.roll(fi, -1) / fi)
            bad = np.abs(d) >= np.pi / 2
            a = np.abs(fi)
            lo = np.minimum(a, np.roll(a, -1))
            hi = np.minimum(np.roll(a, 1), np.roll(a, -2))
            s_i = S[i]
            seg = np.diff(np.append(s_i, 1.0))
            dip = (lo < 0.5 * hi) & (seg > 1e-9)
            bad = np.nonzero(bad | dip)[0]
            if bad.size == 0:
                result[i] = int(round(d.sum() / (2 * np.pi)))
                continue
            s = S[i]
            s_next = np.append(s[1:], 1.0)
            new_s[i] = 0.5 * (s[bad] + s_next[bad])
        pending = list(new_s)
        if not pending:
            return result
        if sum(len(S[i]) for i in pending) > max_points:
            break
        allpts = np.concatenate([contours[i].at(new_s[i]) for i in pending])
        newv = np.asarray(f(allpts), dtype=complex)
        pos = 0
        for i in pending:
            m = len(new_s[i])
            s_all = np.concatenate([S[i], new_s[i]])
            f_all = np.concatenate([F[i], newv[pos : pos + m]])
            order = np.argsort(s_all, kind="stable")
            S[i], F[i] = s_all[order], f_all[order]
            pos += m
    raise PhaseJump("could not bound phase increments below pi/2")


def winding_number(f, contour: Contour, n_samples: int = 64, floor: float = 1e-12) -> int:
    """Integer winding of ``arg f`` along one closed contour."""
    return winding_numbers(f, [contour], n_samples=n_samples, floor=floor)[0]


def det2(M: np.ndarray) -> np.ndarray:
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def inv2(M: np.ndarray) -> np.ndarray:
    """Inverse of (batched) 2x2 matrices via the adjugate."""
    out = np.empty_like(M)
    d = det2(M)
    out[..., 0, 0] = M[..., 1, 1] / d
    out[..., 1, 1] = M[..., 0, 0] / d
    out[..., 0, 1] = -M[..., 0, 1] / d
    out[..., 1, 0] = -M[..., 1, 0] / d
    return out
