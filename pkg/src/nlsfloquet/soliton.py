"""Stationary one-soliton of focusing NLS as an exact oracle.

``u(x,t) = sqrt(omega) sech(x sqrt(omega) - gamma) e^{i omega t}`` has boundary
pair ``{alpha e^{i omega t}, c e^{i omega t}}`` with every spectral function
known in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import PeriodicPair, single_exponential_pair
from .numerics import NumericsError

POLE_TOL = 1e-10
CUT_TOL = 1e-10
ORIGIN_EXCLUSION = 1e-6


class InvalidOmega(ValueError):
    pass


class PoleProximity(NumericsError):
    pass


class CutProximity(NumericsError):
    pass


@dataclass(frozen=True)
class SolitonParams:
    gamma: float
    omega: float
    alpha: float
    c: float
    K1: complex
    K2: complex

    @property
    def tau(self) -> float:
        return 2 * np.pi / self.omega

    @property
    def sqrt_omega(self) -> float:
        return float(np.sqrt(self.omega))


def soliton_params(gamma: float, omega: float) -> SolitonParams:
    if not (np.isfinite(omega) and omega > 0):
        raise InvalidOmega(f"omega must be > 0, got {omega}")
    s = np.sqrt(omega)
    alpha = s / np.cosh(gamma)
    c = omega * np.sinh(gamma) / np.cosh(gamma) ** 2
    alt = np.sign(gamma) * alpha * np.sqrt(max(omega - alpha**2, 0.0))
    # omega - alpha^2 cancels for small gamma; allow for the rounding it amplifies
    slack = 1e-12 * max(1.0, abs(c)) + alpha * np.sqrt(8 * np.finfo(float).eps * omega)
    if abs(c - alt) > slack:
        raise NumericsError(f"c identity violated: {c} vs {alt}")
    return SolitonParams(float(gamma), float(omega), float(alpha), float(c), 0.5j * s, 0.5j * s * np.tanh(gamma))


def soliton_pair(p: SolitonParams) -> PeriodicPair:
    return single_exponential_pair(p.alpha, p.omega, p.c, -1)


def soliton_profile(p: SolitonParams, x, t=0.0):
    x = np.asarray(x, float)
    with np.errstate(over="ignore"):
        return p.sqrt_omega / np.cosh(x * p.sqrt_omega - p.gamma) * np.exp(1j * p.omega * t)


def l1_norm(p: SolitonParams) -> float:
    """``||u(., t)||_{L^1(0, inf)}``; the same for every t."""
    return float(2 * np.arctan(np.exp(p.gamma)))


def _on_cut(p: SolitonParams, k: complex) -> bool:
    lo, hi = sorted((abs(p.K2.imag), abs(p.K1.imag)))
    if abs(k.real) > CUT_TOL:
        return False
    y = abs(k.imag)
    return lo - CUT_TOL <= y <= hi + CUT_TOL


def _check_ab(p: SolitonParams, k: complex):
    if abs(k + p.K1) < POLE_TOL * max(1.0, abs(p.K1)):
        raise PoleProximity(f"k={k} is at the pole -K1 of a, b")


def _check_AB(p: SolitonParams, k: complex):
    if _on_cut(p, k):
        raise CutProximity(f"k={k} lies on a branch cut of A, B")
    if p.gamma == 0 and abs(k) < ORIGIN_EXCLUSION:
        raise CutProximity("k is within the excluded disk at the origin (gamma = 0)")


def _A(p: SolitonParams, k):
    return np.sqrt(1 - p.omega / np.cosh(p.gamma) ** 2 / (4 * k * k + p.omega))


def soliton_spectra(p: SolitonParams, k: complex):
    """``(a, b, A, B)`` at ``k``; A uses the principal root, cut on the imaginary segments."""
    k = complex(k)
    _check_ab(p, k)
    _check_AB(p, k)
    s, g = p.sqrt_omega, p.gamma
    a = (2 * k - 1j * s * np.tanh(g)) / (2 * k + 1j * s)
    b = s / np.cosh(g) / (2j * k - s)
    A = _A(p, k)
    B = s * A / (s * np.sinh(g) + 2j * k * np.cosh(g))
    return complex(a), complex(b), complex(A), complex(B)


def soliton_spectra_rational(p: SolitonParams, k: complex):
    """The same four functions written through ``K1, K2``."""
    k = complex(k)
    K1, K2, al = p.K1, p.K2, p.alpha
    b = al / (2j * (k + K1))
    a = (k - K2) / (k + K1)
    A = np.sqrt((k + K2) * (k - K2) / ((k + K1) * (k - K1)))
    B = al / 2j * A / (k - K2)
    return complex(a), complex(b), complex(A), complex(B)


def soliton_eigenfunctions(p: SolitonParams, x: float, t: float, k: complex):
    """``(mu1_12, mu1_22, mu3)`` in closed form."""
    if x < 0:
        raise ValueError("x must be >= 0")
    k = complex(k)
    s, g = p.sqrt_omega, p.gamma
    for pole in (p.K1, -p.K1, p.K2):
        if abs(k - pole) < POLE_TOL * max(1.0, abs(p.K1)):
            raise PoleProximity(f"k={k} is at a pole of the eigenfunctions")
    _check_AB(p, k)
    th = np.tanh(g - x * s)
    sh = 1 / np.cosh(g - x * s)
    ph = np.exp(1j * t * p.omega)
    mu3 = np.array(
        [
            [(2 * k + 1j * s * th) / (2 * k - 1j * s), -ph * s * sh / (s - 2j * k)],
            [s * sh / (ph * (2j * k + s)), (2 * k - 1j * s * th) / (2 * k + 1j * s)],
        ]
    )
    A = _A(p, k)
    den = s * np.tanh(g) + 2j * k
    mu1_12 = A * s * ph * sh / den
    mu1_22 = A * (s * th + 2j * k) / den
    return complex(mu1_12), complex(mu1_22), mu3


def soliton_E(p: SolitonParams, t: float, k: complex):
    """``(E_12, E_22)`` of the background eigenfunction in closed form."""
    a, b, A, B = soliton_spectra(p, k)
    return complex(B * np.exp(1j * t * p.omega)), A


def soliton_global_relation_residual(p: SolitonParams, k: complex) -> float:
    a, b, A, B = soliton_spectra(p, k)
    return float(abs(b * A - a * B))


def xpart_residual(p: SolitonParams, x: float, t: float, k: complex, h: float = 1e-5) -> float:
    """Central-difference residual of ``mu_x + ik[sigma3, mu] - U mu`` for ``mu3``."""
    k = complex(k)
    mu = soliton_eigenfunctions(p, x, t, k)[2]
    dmu = (soliton_eigenfunctions(p, x + h, t, k)[2] - soliton_eigenfunctions(p, max(x - h, 0.0), t, k)[2])
    dmu /= h + min(h, x)
    u = complex(soliton_profile(p, x, t))
    U = np.array([[0, u], [-np.conj(u), 0]])
    s3 = np.diag([1.0, -1.0])
    R = dmu + 1j * k * (s3 @ mu - mu @ s3) - U @ mu
    return float(np.abs(R).max())


def soliton_cuts(p: SolitonParams):
    """The cuts ``[K2, K1]`` and ``[-K1, -K2]`` on the imaginary axis."""
    return [(complex(p.K2), complex(p.K1)), (complex(-p.K1), complex(-p.K2))]
