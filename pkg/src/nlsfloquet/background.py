"""Periodic boundary pairs and the background coefficient matrix V^b."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad


class QuadratureFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class PeriodicPair:
    """A tau-periodic Dirichlet/Neumann pair given by finite Fourier series.

    ``g_j(t) = sum(coeff * exp(2j*pi*n*t/tau))`` over the ``(n, coeff)``
    entries of ``g0_modes`` / ``g1_modes``. ``lam`` is +1 (defocusing) or -1
    (focusing).
    """

    lam: int
    tau: float
    g0_modes: tuple = ()
    g1_modes: tuple = ()

    def __post_init__(self):
        if self.lam not in (1, -1):
            raise ValueError("lambda must be +1 or -1")
        if not (self.tau > 0 and np.isfinite(self.tau)):
            raise ValueError("tau must be a positive finite number")
        for name in ("g0_modes", "g1_modes"):
            modes = tuple((int(n), complex(c)) for n, c in getattr(self, name))
            object.__setattr__(self, name, modes)

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for _, c in self.g0_modes + self.g1_modes)

    def _series(self, modes, t, deriv=False):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        w = 2 * np.pi / self.tau
        for n, c in modes:
            # Reduce the phase mod 2*pi exactly per mode so t and t+tau agree.
            ph = np.exp(1j * w * n * np.mod(t, self.tau))
            out = out + (1j * w * n * c if deriv else c) * ph
        return out

    def g0(self, t):
        return self._series(self.g0_modes, t)

    def g1(self, t):
        return self._series(self.g1_modes, t)

    def g0_t(self, t):
        return self._series(self.g0_modes, t, deriv=True)


def zero_pair(tau: float, lam: int = -1) -> PeriodicPair:
    return PeriodicPair(lam, tau)


def single_exponential_pair(alpha: float, omega: float, c: complex, lam: int) -> PeriodicPair:
    """The pair ``{alpha e^{i omega t}, c e^{i omega t}}`` with ``tau = 2 pi / |omega|``."""
    if omega == 0:
        raise ValueError("omega must be nonzero")
    n = 1 if omega > 0 else -1
    return PeriodicPair(lam, 2 * np.pi / abs(omega), ((n, alpha),), ((n, c),))


def eval_pair(pair: PeriodicPair, t):
    """Return ``(g0(t), g1(t))``; vectorized over ``t``."""
    g0, g1 = pair.g0(t), pair.g1(t)
    if np.ndim(t) == 0:
        return complex(g0), complex(g1)
    return g0, g1


def vb_from_values(lam: int, g0, g1, k):
    """V^b entries from boundary values; broadcasts over ``g0, g1, k``."""
    g0, g1, k = np.broadcast_arrays(np.asarray(g0, complex), np.asarray(g1, complex), np.asarray(k, complex))
    V = np.empty(g0.shape + (2, 2), dtype=complex)
    a = np.abs(g0) ** 2
    V[..., 0, 0] = -1j * lam * a
    V[..., 1, 1] = 1j * lam * a
    V[..., 0, 1] = 2 * k * g0 + 1j * g1
    V[..., 1, 0] = 2 * lam * k * np.conj(g0) - 1j * lam * np.conj(g1)
    return V


def assemble_Vb(pair: PeriodicPair, t, k):
    """``V^b(t, k)``; scalar inputs give a ``(2, 2)`` array."""
    g0, g1 = pair.g0(t), pair.g1(t)
    return vb_from_values(pair.lam, g0, g1, k)


@dataclass(frozen=True)
class EtaValues:
    eta1: float
    eta2: complex
    t: float


def eta(pair: PeriodicPair, t: float, tol: float = 1e-11) -> EtaValues:
    """The integrals eta_1(t) and eta_2(t) of the large-k expansion.

    eta_1 is the integral of ``lam * Im(conj(g0) g1)``; eta_2 nests eta_1, so
    its integrand calls an inner quadrature for eta_1 at each node.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = pair.lam
    if t == 0:
        return EtaValues(0.0, 0j, 0.0)

    def im_g0g1(s):
        return float(np.imag(np.conj(pair.g0(s)) * pair.g1(s)))

    limit = 200 + int(50 * t / pair.tau)

    def integrate(fun, a, b):
        val, err = quad(fun, a, b, epsabs=tol, epsrel=tol, limit=limit, full_output=1)[:2]
        if not np.isfinite(val) or err > 1e3 * max(tol, tol * abs(val)):
            raise QuadratureFailure(f"quadrature did not converge (err={err:g})")
        return val

    e1 = lam * integrate(im_g0g1, 0.0, t)

    def eta1_at(s):
        return lam * integrate(im_g0g1, 0.0, s) if s > 0 else 0.0

    def integrand(s):
        g0, g1, g0t = pair.g0(s), pair.g1(s), pair.g0_t(s)
        val = (
            lam * abs(g0) ** 4
            - abs(g1) ** 2
            - 4j * np.imag(np.conj(g0) * g1) * eta1_at(s)
            - 1j * np.conj(g0) * g0t
        )
        return complex(val)

    re = integrate(lambda s: integrand(s).real, 0.0, t)
    im = integrate(lambda s: integrand(s).imag, 0.0, t)
    return EtaValues(float(e1), complex(lam / 4 * (re + 1j * im)), float(t))
