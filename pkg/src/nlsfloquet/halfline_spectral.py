"""Spectral functions of half-line data.

``a, b`` come from an initial datum ``u0(x)`` through the x-part of the Lax
pair; ``A, B`` come from boundary traces ``g0, g1`` that approach a periodic
background, through a truncated Neumann series around the background
eigenfunction ``E(t, k)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import lfilter

from .background import PeriodicPair, vb_from_values
from .floquet import DEFAULT_TOL, BranchValue, anchored_branch, background_eigenfunction
from .numerics import NumericsError, inv2, solve_matrix_ode_batch

TAIL_REL = 1e-10
SERIES_TOL = 1e-12
MAX_TERMS = 30
DECAY_POWER = 3.5
SLOW_DECAY_FACTOR = 2.0  # about 2^(3.5 - q): flags decay slower than (1+t)^-2.5
GR_MARGIN = 0.1


class TailTooLarge(NumericsError):
    pass


class SlowDecay(NumericsError):
    pass


class SeriesStall(NumericsError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class SampledInitialDatum:
    """Samples of ``u0`` on ``0 = x_0 < ... < x_N`` with decay bound ``M (1+x)^-p``.

    The bound is checked at the nodes. The tail ``M (1 + x_N)^-p`` must be at
    most ``1e-10`` times the sup of the samples.
    """

    grid: np.ndarray
    values: np.ndarray
    M: float
    p: float

    def __post_init__(self):
        x = np.asarray(self.grid, float)
        v = np.asarray(self.values, complex)
        object.__setattr__(self, "grid", x)
        object.__setattr__(self, "values", v)
        if x.ndim != 1 or x.size < 4 or x.shape != v.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length >= 4")
        if x[0] != 0 or np.any(np.diff(x) <= 0):
            raise ValueError("grid must start at 0 and increase strictly")
        if self.M < 0 or self.p <= 0:
            raise ValueError("decay bound needs M >= 0 and p > 0")
        bound = self.M * (1 + x) ** (-self.p)
        if np.any(np.abs(v) > bound * (1 + 1e-9) + 1e-300):
            raise ValueError("samples violate the asserted decay bound")
        scale = np.abs(v).max()
        if self.tail_bound > TAIL_REL * scale and scale > 0:
            raise TailTooLarge(
                f"tail bound {self.tail_bound:.2e} exceeds {TAIL_REL:g} * sup|u0| = {TAIL_REL * scale:.2e}"
            )

    @property
    def tail_bound(self) -> float:
        return float(self.M * (1 + self.grid[-1]) ** (-self.p))

    @property
    def spline(self) -> CubicSpline:
        return CubicSpline(self.grid, self.values)

    @classmethod
    def from_function(cls, f: Callable, x_max: float, n: int = 2001, p: float = 10.0):
        """Sample ``f`` on a uniform grid and fit the smallest valid ``M``."""
        x = np.linspace(0.0, x_max, n)
        v = np.asarray(f(x), complex)
        M = float(np.max(np.abs(v) * (1 + x) ** p))
        return cls(x, v, M * (1 + 1e-12), p)


@dataclass(frozen=True)
class BoundaryTraces:
    """Dirichlet and Neumann traces on ``[0, T]``.

    Built either from samples (cubic interpolation) or from callables that are
    evaluated exactly.
    """

    t: np.ndarray
    g0: np.ndarray
    g1: np.ndarray
    f0: Callable | None = None
    f1: Callable | None = None

    def __post_init__(self):
        t = np.asarray(self.t, float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "g0", np.asarray(self.g0, complex))
        object.__setattr__(self, "g1", np.asarray(self.g1, complex))
        if t.ndim != 1 or t.size < 4 or t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ValueError("trace grid must start at 0 and increase strictly")
        if self.g0.shape != t.shape or self.g1.shape != t.shape:
            raise ValueError("trace samples must match the grid")

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @classmethod
    def from_functions(cls, f0: Callable, f1: Callable, T: float, n: int = 4001):
        t = np.linspace(0.0, T, n)
        return cls(t, f0(t), f1(t), f0, f1)

    @classmethod
    def from_pair(cls, pair: PeriodicPair, T: float, n: int = 4001, f0=None, f1=None):
        """Background traces, optionally plus perturbations ``f0, f1``."""
        d0 = f0 or (lambda t: 0.0)
        d1 = f1 or (lambda t: 0.0)
        return cls.from_functions(lambda t: pair.g0(t) + d0(t), lambda t: pair.g1(t) + d1(t), T, n)

    def at(self, s):
        s = np.asarray(s, float)
        if np.any(s > self.T * (1 + 1e-12)) or np.any(s < 0):
            raise ValueError("evaluation outside the trace interval")
        if self.f0 is not None:
            return np.asarray(self.f0(s), complex), np.asarray(self.f1(s), complex)
        return CubicSpline(self.t, self.g0)(s), CubicSpline(self.t, self.g1)(s)


@dataclass
class SpectralSample:
    k: complex
    a: complex
    b: complex
    A: complex
    B: complex
    d: complex = complex("nan")
    gr_residual: float = float("nan")
    t_used: float = float("nan")
    tail_estimate: float = 0.0
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def c(z):
            z = complex(z)
            return None if np.isnan(z.real) or np.isnan(z.imag) else [z.real, z.imag]

        return {
            "k": c(self.k), "a": c(self.a), "b": c(self.b), "A": c(self.A), "B": c(self.B),
            "d": c(self.d), "gr_residual": None if np.isnan(self.gr_residual) else self.gr_residual, "t_used": self.t_used,
            "tail_estimate": self.tail_estimate, "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# Initial datum


def initial_spectra(u0: SampledInitialDatum, lam: int, k, tol: float = 1e-11):
    """``(a, b)`` from the second column of ``mu3(x, 0, k)``.

    ``m' = [[-2ik, u0], [lam conj(u0), 0]] m`` is integrated from ``x_N``
    (where ``m = (0, 1)``) down to ``x = 0``. Vectorized over ``k``.
    """
    ks = np.atleast_1d(np.asarray(k, complex))
    if np.any(ks.imag < -1e-14):
        raise DomainError("a, b are defined for Im k >= 0")
    spl = u0.spline
    xN = float(u0.grid[-1])

    def rhs(s, Y, sel):
        u = spl(xN - s)
        kk = ks[sel]
        out = np.empty_like(Y)
        # d/ds = -d/dx
        out[:, 0, 0] = 2j * kk * Y[:, 0, 0] - u * Y[:, 1, 0]
        out[:, 1, 0] = -lam * np.conj(u) * Y[:, 0, 0]
        return out

    Y0 = np.zeros((ks.size, 2, 1), complex)
    Y0[:, 1, 0] = 1
    Y = solve_matrix_ode_batch(rhs, 0.0, xN, Y0, tol, tol, method="dop853").Y
    a, b = Y[:, 1, 0], Y[:, 0, 0]
    if np.ndim(k) == 0:
        return complex(a[0]), complex(b[0])
    return a, b


# ---------------------------------------------------------------------------
# Boundary traces


@dataclass
class VolterraResult:
    """Column of ``mu1(0, t, k)`` on the grid plus diagnostics."""

    k: complex
    column: int
    t: np.ndarray
    Psi: np.ndarray  # (N, 2)
    E_col: np.ndarray  # (N, 2) background column [E(t, k)]_column
    term_norms: list
    tail_estimate: float
    branch: BranchValue

    @property
    def value(self) -> np.ndarray:
        return self.Psi[0]


def _one_period_E(pair: PeriodicPair, k: complex, n_per: int, branch: BranchValue, tol: float):
    ts = np.arange(n_per) * (pair.tau / n_per)
    frames = background_eigenfunction(pair, ts, k, tol=tol, branch=branch)
    return np.stack([f.E for f in frames])


def _decay_check(t, dn):
    """Model constant ``C`` of ``|Delta| <= C (1+t)^-7/2`` from the late half."""
    w = (1 + t) ** DECAY_POWER * dn
    half = t >= t[-1] / 2
    early, late = w[~half].max(), w[half].max()
    if late > SLOW_DECAY_FACTOR * max(early, 1e-300):
        raise SlowDecay(
            f"(1+t)^3.5 |Delta| grows from {early:.2e} to {late:.2e}; traces decay slower than the model"
        )
    return late


def volterra_column(
    pair: PeriodicPair,
    traces: BoundaryTraces,
    k: complex,
    column: int = 2,
    T: float | None = None,
    n_per: int = 256,
    tol: float = DEFAULT_TOL,
    branch: BranchValue | None = None,
    avoid=(),
) -> VolterraResult:
    """Neumann series for one column of ``mu1(0, t, k)`` on ``[0, T]``.

    The kernel ``E(t) diag(e^{2i Om~ (t'-t)}, 1) E(t')^{-1}`` (second column) is
    applied by a backward linear recurrence, so only bounded exponentials are
    ever formed. Integrals over one step use the third-order rule
    ``h(-f_{i-1} + 8 f_i + 5 f_{i+1})/12``.
    """
    if column not in (1, 2):
        raise ValueError("column must be 1 or 2")
    k = complex(k)
    T = traces.T if T is None else float(T)
    if T > traces.T * (1 + 1e-12):
        raise ValueError("horizon beyond the trace interval")
    bv = anchored_branch(pair, k, avoid=avoid, tol=tol) if branch is None else branch
    im_om = bv.OmegaTilde.imag
    if (column == 2 and im_om < -1e-12) or (column == 1 and im_om > 1e-12):
        side = "D+" if column == 2 else "D-"
        raise DomainError(f"k={k} is not in the closure of {side} (Im Om~ = {im_om:.3e})")

    h = pair.tau / n_per
    N = int(np.floor(T / h + 1e-9))
    if N < 3:
        raise ValueError("horizon shorter than three grid steps")
    t = np.arange(N + 1) * h
    E = _one_period_E(pair, k, n_per, bv, tol)[np.arange(N + 1) % n_per]
    Einv = inv2(E)

    g0, g1 = traces.at(t)
    gb0, gb1 = pair.g0(t), pair.g1(t)
    Delta = vb_from_values(pair.lam, g0, g1, k) - vb_from_values(pair.lam, gb0, gb1, k)
    C = _decay_check(t, np.abs(Delta).max(axis=(1, 2)))
    tail = C * (1 + t[-1]) ** (1 - DECAY_POWER) / (DECAY_POWER - 1)

    c = -2 * bv.logz / pair.tau  # 2i Om~
    # exponent per grid step for the component carrying e^{+-2i Om~ (t'-t)}
    j = 0 if column == 2 else 1
    r = np.array([1.0 + 0j, 1.0 + 0j])
    r[j] = np.exp((c if column == 2 else -c) * h)
    col = column - 1

    Psi0 = E[:, :, col].copy()
    total = Psi0.copy()
    norms = [float(np.abs(Psi0).max())]
    term = Psi0
    EinvD = Einv @ Delta
    for _ in range(MAX_TERMS):
        g = np.einsum("nij,nj->ni", EinvD, term)
        J = np.empty_like(g)
        for comp in range(2):
            rc = r[comp]
            f = g[:, comp]
            q = np.empty(N, complex)
            # integral over [t_i, t_{i+1}] of rc^{(t'-t_i)/h} f(t')
            q[1:] = h / 12 * (-f[:-2] / rc + 8 * f[1:-1] + 5 * rc * f[2:])
            q[0] = h / 12 * (5 * f[0] + 8 * rc * f[1] - rc**2 * f[2])
            Jr = lfilter([1.0], [1.0, -rc], q[::-1])[::-1]
            J[:-1, comp] = Jr
            J[-1, comp] = 0
        term = -np.einsum("nij,nj->ni", E, J)
        nrm = float(np.abs(term).max())
        norms.append(nrm)
        total = total + term
        if nrm < SERIES_TOL:
            break
    else:
        raise SeriesStall(f"Neumann series not below {SERIES_TOL:g} after {MAX_TERMS} terms")
    return VolterraResult(k, column, t, total, Psi0, norms, float(tail), bv)


def boundary_spectra(
    pair: PeriodicPair,
    traces: BoundaryTraces,
    k: complex,
    T: float | None = None,
    n_per: int = 256,
    tol: float = DEFAULT_TOL,
    avoid=(),
):
    """``(A, B)`` at ``k`` in the closure of D+; ``(A, B) = (Psi_2, Psi_1)`` at ``t = 0``."""
    res = volterra_column(pair, traces, k, 2, T, n_per, tol, avoid=avoid)
    B, A = res.value
    return complex(A), complex(B)


def first_column(pair, traces, k, T=None, n_per=256, tol=DEFAULT_TOL, avoid=()):
    """``(conj A(conj k), lam conj B(conj k))`` at ``k`` in the closure of D-."""
    res = volterra_column(pair, traces, k, 1, T, n_per, tol, avoid=avoid)
    return complex(res.value[0]), complex(res.value[1])


# ---------------------------------------------------------------------------
# Relations


def gr_admissible(branch: BranchValue, margin: float = GR_MARGIN) -> bool:
    """``Im(Om~ + 2k^2) > margin`` and ``k`` in D1."""
    k = branch.k
    return k.imag > 0 and branch.OmegaTilde.imag >= 0 and (branch.OmegaTilde + 2 * k * k).imag > margin


def global_relation_residual(sample: SpectralSample) -> float:
    return float(abs(sample.A * sample.b - sample.B * sample.a))


def t_independence_check(a_t, b_t, A_t, B_t) -> float:
    """``|(A b - B a)(t1) - (A b - B a)(t2)|`` from pairs of values at two times."""
    c1 = A_t[0] * b_t[0] - B_t[0] * a_t[0]
    c2 = A_t[1] * b_t[1] - B_t[1] * a_t[1]
    return float(abs(c1 - c2))


def compute_d(sample: SpectralSample, conj_sample: SpectralSample, lam: int) -> complex:
    """``d(k) = a(k) conj(A(conj k)) - lam b(k) conj(B(conj k))``."""
    if abs(conj_sample.k - np.conj(sample.k)) > 1e-12 * max(1.0, abs(sample.k)):
        raise ValueError("conj_sample must be evaluated at conj(k)")
    return complex(sample.a * np.conj(conj_sample.A) - lam * sample.b * np.conj(conj_sample.B))


# ---------------------------------------------------------------------------
# CSV input


def _read_complex_csv(path, first: str):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != [first, "re", "im"]:
        raise ValueError(f"{path}: header must be '{first},re,im'")
    data = np.array([[float(c) for c in r] for r in rows[1:] if r], float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError(f"{path}: expected three columns")
    return data[:, 0], data[:, 1] + 1j * data[:, 2]


def read_initial_datum(path, M: float, p: float) -> SampledInitialDatum:
    x, v = _read_complex_csv(path, "x")
    return SampledInitialDatum(x, v, M, p)


def read_traces(path_g0, path_g1) -> BoundaryTraces:
    t0, g0 = _read_complex_csv(path_g0, "t")
    t1, g1 = _read_complex_csv(path_g1, "t")
    if t0.shape != t1.shape or np.any(t0 != t1):
        raise ValueError("g0 and g1 traces must share a time grid")
    return BoundaryTraces(t0, g0, g1)
