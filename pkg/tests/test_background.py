import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlsfloquet.background import (
    PeriodicPair,
    assemble_Vb,
    eta,
    eval_pair,
    single_exponential_pair,
    zero_pair,
)
from nlsfloquet.soliton import soliton_pair, soliton_params

cplx = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)
modes = st.lists(st.tuples(st.integers(-3, 3), cplx), max_size=3)
SIGMA1 = np.array([[0, 1], [1, 0]])


@st.composite
def pairs(draw):
    return PeriodicPair(draw(st.sampled_from([1, -1])), draw(st.floats(0.5, 5.0)), tuple(draw(modes)), tuple(draw(modes)))


def test_eval_zero_pair():
    assert eval_pair(zero_pair(1.0), 0.37) == (0, 0)


def test_eval_single_exponential():
    pair = single_exponential_pair(1.0, 2.0, 1.0, -1)
    assert eval_pair(pair, 0.0) == pytest.approx((1, 1))
    g0, g1 = eval_pair(pair, np.pi)
    assert abs(g0 - 1) < 1e-14 and abs(g1 - 1) < 1e-14


def test_invalid_pairs():
    with pytest.raises(ValueError):
        PeriodicPair(0, 1.0)
    with pytest.raises(ValueError):
        PeriodicPair(1, -1.0)
    with pytest.raises(ValueError):
        single_exponential_pair(1.0, 0.0, 1.0, 1)


def test_vb_examples():
    assert np.array_equal(assemble_Vb(zero_pair(1.0), 0.3, 1 + 1j), np.zeros((2, 2)))
    V = assemble_Vb(single_exponential_pair(1.0, 2.0, 1.0, -1), 0.0, 0.0)
    assert np.allclose(V, [[1j, 1j], [1j, -1j]])


@given(pairs(), st.floats(0, 10), cplx)
def test_vb_trace_free_and_periodic(pair, t, k):
    V = assemble_Vb(pair, t, k)
    assert abs(np.trace(V)) < 1e-14
    # t + tau itself rounds, so agreement is to machine precision
    assert np.abs(V - assemble_Vb(pair, t + pair.tau, k)).max() <= 1e-13 * max(1.0, np.abs(V).max())


@given(pairs(), st.floats(0, 10), cplx)
def test_vb_conjugation_symmetry(pair, t, k):
    # V(conj k) = lam-weighted sigma1-conjugate of V(k): V12(conj k) = lam^-1 conj V21(k)
    V = assemble_Vb(pair, t, k)
    Vc = assemble_Vb(pair, t, np.conj(k))
    L = np.diag([1, pair.lam])
    want = L @ SIGMA1 @ np.conj(V) @ SIGMA1 @ L
    assert np.abs(Vc - want).max() <= 1e-14 * max(1.0, np.abs(V).max())


def test_eta_zero_pair():
    e = eta(zero_pair(1.0), 0.8)
    assert e.eta1 == 0 and e.eta2 == 0


@pytest.mark.parametrize("lam,c", [(-1, 0.4 + 0.7j), (1, 2 - 1j)])
def test_eta1_single_exponential(lam, c):
    pair = single_exponential_pair(1.3, 2.0, c, lam)
    t = 0.9
    assert eta(pair, t).eta1 == pytest.approx(lam * 1.3 * c.imag * t, rel=1e-10)


def test_eta1_soliton_vanishes():
    pair = soliton_pair(soliton_params(0.7, 2.0))
    assert abs(eta(pair, pair.tau).eta1) < 1e-12


@given(pairs(), st.floats(0.01, 3))
def test_eta1_real(pair, t):
    e = eta(pair, t)
    assert isinstance(e.eta1, float) and np.isfinite(e.eta1)
    assert eta(pair, 0.0).eta1 == 0 and eta(pair, 0.0).eta2 == 0
