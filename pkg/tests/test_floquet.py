import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsfloquet.background import PeriodicPair, single_exponential_pair, zero_pair
from nlsfloquet.exponential import ExponentialTriple, closed_form_Sb, omega_branch
from nlsfloquet.floquet import (
    BranchPointProximity,
    anchor_point,
    anchored_branch,
    background_eigenfunction,
    check_asymptotics,
    diagonalizer,
    discriminant,
    floquet_point,
    monodromy,
    propagate,
    tpart_residual,
)
from nlsfloquet.numerics import det2, inv2
from nlsfloquet.soliton import soliton_pair, soliton_params, soliton_spectra

SIGMA1 = np.array([[0, 1], [1, 0]])
TRIPLE = ExponentialTriple(1.0, 2.0, 1.0 + 0j, -1)


def test_zero_pair_monodromy():
    k = np.array([0.4, 1 + 0.3j, -0.2 + 0.5j])
    Z = monodromy(zero_pair(np.pi), k)
    for kk, ZZ in zip(k, Z):
        want = np.diag([np.exp(-2j * kk * kk * np.pi), np.exp(2j * kk * kk * np.pi)])
        assert np.abs(ZZ - want).max() < 1e-8 * np.abs(want).max()


@pytest.mark.parametrize("k", [0.3, 1 + 0.5j, 2j])
def test_single_exponential_trace(k):
    Z = monodromy(TRIPLE.pair(), k)
    W = omega_branch(TRIPLE, k)
    assert abs(Z[0, 0] + Z[1, 1] + 2 * np.cos(W * TRIPLE.tau)) < 1e-8


@pytest.mark.parametrize("k", [0.6 + 0.4j, 1.2 + 0.1j, -0.7 + 0.6j, 0.3 - 0.8j])
def test_soliton_sqrtG(k):
    p = soliton_params(0.0, 4.0)
    bv = anchored_branch(soliton_pair(p), k)
    assert abs(bv.sqrtG - 2j * np.sin(2 * k * k * p.tau)) < 1e-8
    assert abs(bv.z - np.exp(-2j * k * k * p.tau)) < 1e-8 * max(1, abs(bv.z))
    assert abs(bv.OmegaTilde - 2 * k * k) < 1e-8


def test_discriminant_diagonal():
    th, tau = 0.7, 2.0
    G, z, Om = discriminant(np.diag([np.exp(-1j * th), np.exp(1j * th)]), tau, sqrtG=2j * np.sin(th))
    assert G == pytest.approx(-4 * np.sin(th) ** 2)
    assert z == pytest.approx(np.exp(-1j * th))
    assert Om == pytest.approx(th / tau)


@pytest.mark.parametrize("k", [0.9 + 0.3j, 1.5 + 0.2j])
def test_single_exponential_z_and_omega(k):
    bv = anchored_branch(TRIPLE.pair(), k)
    W = omega_branch(TRIPLE, k)
    assert abs(bv.z + np.exp(-1j * W * TRIPLE.tau)) < 1e-8 * max(1, abs(bv.z))
    assert abs(bv.OmegaTilde - (W - TRIPLE.omega / 2)) < 1e-8


def test_diagonalizer_diagonal_Z():
    th = 0.4
    S = diagonalizer(np.diag([np.exp(-1j * th), np.exp(1j * th)]), 2j * np.sin(th))
    assert np.abs(S - np.eye(2)).max() < 1e-15


def test_diagonalizer_declines_at_soliton_G_zero():
    # k = 2i is a zero of G for (gamma, omega) = (0, 4): 2 k^2 tau = -4 pi
    p = soliton_params(0.0, 4.0)
    pair = soliton_pair(p)
    Z = monodromy(pair, 2j)
    with pytest.raises(BranchPointProximity):
        diagonalizer(Z, 2j * np.sin(2 * (2j) ** 2 * p.tau))
    assert soliton_spectra(p, 2j)[2] == pytest.approx(np.sqrt(4 / 3), rel=1e-14)


@pytest.mark.parametrize("k", [0.3 + 1.9j, 2.1j + 0.2, 0.8 + 0.5j])
def test_diagonalizer_soliton_A(k):
    p = soliton_params(0.0, 4.0)
    fp = floquet_point(soliton_pair(p), k)
    assert abs(fp.Sb[1, 1] - soliton_spectra(p, k)[2]) < 1e-8


@settings(max_examples=10)
@given(st.floats(-1.5, 1.5), st.floats(0.1, 1.5))
def test_diagonalizer_conjugates(x, y):
    k = complex(x, y)
    fp = floquet_point(TRIPLE.pair(), k)
    if fp.Sb is None:
        return
    D = np.diag([fp.z, 1 / fp.z])
    scale = max(1.0, np.abs(fp.Z).max())
    assert np.abs(fp.Z @ fp.Sb - fp.Sb @ D).max() < 1e-9 * scale
    assert abs(det2(fp.Sb) - 1) < 1e-9


def test_background_zero_pair():
    k = 0.7 + 0.4j
    fr = background_eigenfunction(zero_pair(1.3), 0.6, k)
    want = np.diag([np.exp(-2j * k * k * 0.6), np.exp(2j * k * k * 0.6)])
    assert np.abs(fr.psi_b - want).max() < 1e-8 * np.abs(want).max()
    assert np.abs(fr.E - np.eye(2)).max() < 1e-8


def test_background_single_exponential():
    k = 0.9 + 0.3j
    pair = TRIPLE.pair()
    bv = anchored_branch(pair, k)
    ts = np.array([0.3, 1.1, 2.5])
    W = bv.OmegaTilde + TRIPLE.omega / 2
    S = closed_form_Sb(TRIPLE, k, W)
    for fr in background_eigenfunction(pair, ts, k, branch=bv):
        t = fr.t
        want = np.diag(np.exp([0.5j * TRIPLE.omega * t, -0.5j * TRIPLE.omega * t])) @ S @ np.diag(np.exp([-1j * W * t, 1j * W * t]))
        R = inv2(want[None])[0] @ fr.psi_b
        assert np.abs(R - np.eye(2)).max() < 1e-8


def test_P_periodic_and_residual():
    pair = PeriodicPair(-1, 1.7, ((0, 0.5), (1, 0.3j)), ((0, 0.2), (-1, 0.1)))
    k = 0.8 + 0.5j
    bv = anchored_branch(pair, k)
    for t in (0.2, 0.9):
        a, b = background_eigenfunction(pair, [t, t + pair.tau], k, branch=bv)
        assert np.abs(a.P - b.P).max() < 1e-8 * max(1, np.abs(a.P).max())
        assert np.abs(a.psi_b - a.E @ np.diag(np.exp([-1j * bv.OmegaTilde * t, 1j * bv.OmegaTilde * t]))).max() < 1e-8

    def psib(t):
        return background_eigenfunction(pair, t, k, branch=bv).psi_b

    assert tpart_residual(pair, k, 0.6, psib) < 1e-6


def test_zero_pair_branch_everywhere():
    pair = zero_pair(np.pi / 2)
    for k in (1 + 1j, -0.6 + 0.3j, 0.2 - 0.9j, -1.1 - 0.4j):
        assert abs(anchored_branch(pair, k).OmegaTilde - 2 * k * k) < 1e-8


def test_anchor_self_test():
    pair = single_exponential_pair(1.0, 2.0, 0.5 + 0.5j, -1)
    kA = anchor_point(pair, 1.0)
    bv = anchored_branch(pair, kA)
    assert abs(bv.OmegaTilde - 2 * kA**2) * abs(kA) < 10.0


def test_asymptotics_reports():
    rays = [np.pi / 8, 3 * np.pi / 8, -np.pi / 8]
    radii = [2.0, 3.0, 4.0]
    rep = check_asymptotics(zero_pair(np.pi), rays, radii)
    assert rep.status == "PASS" and np.abs(rep.ratio).max() <= 1e-8
    p = soliton_params(0.5, 2.0)
    rep = check_asymptotics(soliton_pair(p), rays, radii)
    assert rep.status == "PASS" and np.abs(rep.ratio).max() <= 1e-6
    rep = check_asymptotics(single_exponential_pair(1.0, 2.0, 0.7, -1), rays, radii)
    assert rep.status == "PASS" and abs(rep.eta1_tau) < 1e-12
    with pytest.raises(ValueError):
        check_asymptotics(zero_pair(1.0), [0.0], radii)


SYM_PAIRS = [
    single_exponential_pair(1.0, 2.0, 0.5 + 0.5j, -1),
    single_exponential_pair(0.8, -3.0, 1.0 - 0.2j, 1),
    PeriodicPair(-1, 2.0, ((0, 0.4), (1, 0.2 + 0.1j)), ((0, 0.3j),)),
]


@settings(max_examples=15)
@given(st.sampled_from(range(3)), st.floats(-1.2, 1.2), st.floats(0.05, 1.2))
def test_conjugation_symmetries(i, x, y):
    pair = SYM_PAIRS[i]
    k = complex(x, y)
    Z, Zc = monodromy(pair, np.array([k, np.conj(k)]))
    L = np.diag([1, pair.lam])
    scale = max(1.0, np.abs(Z).max())
    assert np.abs(Zc - L @ SIGMA1 @ np.conj(Z) @ SIGMA1 @ L).max() < 1e-9 * scale
    G = (Z[0, 0] + Z[1, 1]) ** 2 - 4
    Gc = (Zc[0, 0] + Zc[1, 1]) ** 2 - 4
    assert abs(Gc - np.conj(G)) < 1e-9 * scale**2
    b, bc = anchored_branch(pair, k), anchored_branch(pair, np.conj(k))
    assert abs(b.z * np.conj(bc.z) - 1) < 1e-9
    assert abs(b.OmegaTilde.imag - np.log(abs(b.z)) / pair.tau) < 1e-12 * max(1, abs(b.OmegaTilde))


@settings(max_examples=10)
@given(st.floats(-1.2, 1.2), st.floats(0.05, 1.2))
def test_Ab_symmetry_and_expB(x, y):
    pair = SYM_PAIRS[0]
    k = complex(x, y)
    f, fc = floquet_point(pair, k), floquet_point(pair, np.conj(k))
    if f.Sb is None or fc.Sb is None:
        return
    assert abs(f.Sb[1, 1] - np.conj(fc.Sb[1, 1])) < 1e-9
    S = f.Sb
    expB = S @ np.diag([np.exp(f.logz), np.exp(-f.logz)]) @ inv2(S)
    assert np.abs(expB - f.Z).max() < 1e-8 * max(1, np.abs(f.Z).max())


def test_det_psi_along_integration():
    pair = SYM_PAIRS[2]
    ts = np.linspace(0, pair.tau, 9)
    psi = propagate(pair, np.full(ts.shape, 0.7 + 0.3j), ts)
    assert np.abs(det2(psi) - 1).max() < 1e-9
