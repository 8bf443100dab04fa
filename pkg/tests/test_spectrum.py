import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsfloquet.background import zero_pair
from nlsfloquet.exponential import ExponentialTriple, odd_branch_points
from nlsfloquet.floquet import monodromy
from nlsfloquet.soliton import soliton_pair, soliton_params
from nlsfloquet.spectrum import (
    ZeroRecord,
    classify_zero,
    consistency_verdict,
    find_zeros,
    focusing_realline_check,
    label_domain,
    qb_ratio,
    zero_census,
)

ZP = zero_pair(np.pi / 2)
GAP = ExponentialTriple(1.0, 0.5, 0.3, -1)


def _G(pair, k):
    Z = monodromy(pair, np.atleast_1d(np.asarray(k, complex)))
    return (Z[:, 0, 0] + Z[:, 1, 1]) ** 2 - 4


def test_zero_pair_real_double_zeros():
    recs = find_zeros(ZP, (0.2, 3.0, -0.2, 0.2))
    # G = -4 sin^2(pi k^2): the window also holds sqrt(n) for n up to 9
    locs = sorted(r.location.real for r in recs)
    want = [np.sqrt(n) for n in range(1, 10) if np.sqrt(n) < 3.0 + 1e-9]
    assert np.allclose(locs[: len(want)], want, atol=1e-3) or np.allclose(locs, want[:-1], atol=1e-3)
    assert np.allclose(locs[:3], [1, np.sqrt(2), np.sqrt(3)], atol=1e-3)
    assert all(r.multiplicity == 2 for r in recs)
    assert all(abs(r.location.imag) < 1e-3 for r in recs)


def test_zero_pair_origin_order_four():
    recs = find_zeros(ZP, (-0.5, 0.5, -0.5, 0.5))
    assert len(recs) == 1
    assert recs[0].multiplicity == 4 and abs(recs[0].location) < 1e-3


def test_gap_point_has_odd_zero():
    simple = [r for r, m in odd_branch_points(GAP) if m % 2]
    assert simple
    r = simple[0]
    recs = find_zeros(GAP.pair(), (r.real - 0.1, r.real + 0.1, r.imag - 0.1, r.imag + 0.1))
    odd = [z for z in recs if z.multiplicity % 2]
    assert odd and min(abs(z.location - r) for z in odd) < 2e-3


def test_census_multiplicity_sum():
    pair = soliton_pair(soliton_params(0.3, 2.0))
    win = (-1.2, 1.3, -1.1, 1.1)
    c = zero_census(pair, win)
    assert sum(z.multiplicity for z in c.records) == c.total_winding
    for z in c.records:
        Z = monodromy(pair, np.array([z.location]))[0]
        assert min(abs(Z[0, 0] + Z[1, 1] - 2), abs(Z[0, 0] + Z[1, 1] + 2)) < 1e-4
    locs = [z.location for z in c.records]
    for z in c.records:
        mate = min(c.records, key=lambda w: abs(w.location - np.conj(z.location)))
        assert abs(mate.location - np.conj(z.location)) < 2e-3 and mate.multiplicity == z.multiplicity
    assert len(locs) >= 3


@pytest.mark.parametrize("k,label", [(1 + 1j, "D1"), (1 - 1j, "D4"), (-1 + 1j, "D2"), (-1 - 1j, "D3")])
def test_zero_pair_quadrants(k, label):
    assert label_domain(ZP, k) == label


def test_soliton_real_k_boundary():
    assert label_domain(soliton_pair(soliton_params(0.0, 4.0)), 0.5) == "boundary"


def test_even_zero_not_violating():
    rec = classify_zero(ZP, ZeroRecord(1.0 + 0j, 2, half_plane="real-axis"))
    assert rec.violating is False


def test_consistent_and_inconsistent_points():
    fam = ExponentialTriple(1.0, 2.0, 1.0, -1)
    assert all(m % 2 == 0 for _, m in odd_branch_points(fam))
    assert consistency_verdict(ZP, (-1.1, 1.2, -1.05, 1.05)).status == "consistent"
    zeros = [ZeroRecord(complex(r), m) for r, m in odd_branch_points(GAP)]
    v = consistency_verdict(GAP.pair(), (-3, 3, -3, 3), ("level",), zeros=zeros)
    assert v.status == "inconsistent"
    assert v.witnesses and all(w.multiplicity % 2 and w.violating for w in v.witnesses)


def test_soliton_verdict_consistent():
    pair = soliton_pair(soliton_params(0.5, 2.0))
    assert consistency_verdict(pair, (-1.3, 1.2, -1.15, 1.15)).status == "consistent"


def test_qb_zero_pair_and_soliton():
    assert qb_ratio(ZP, 0.7 + 0.4j) == 0
    p = soliton_params(0.4, 3.0)
    for k in (0.6 + 0.5j, -0.3 + 1.7j):
        want = np.sqrt(p.omega) / (np.sqrt(p.omega) * np.sinh(p.gamma) + 2j * k * np.cosh(p.gamma))
        assert abs(qb_ratio(soliton_pair(p), k) - want) < 1e-8


def test_qb_defocusing_unimodular():
    tr = ExponentialTriple(1.0, -2.0, 0.5, 1)
    ks = np.linspace(-1, 1, 241)
    G = _G(tr.pair(), ks)
    good = ks[(G.real > 1e-2)]
    assert len(good) > 5
    for k in good[:: max(1, len(good) // 6)]:
        assert abs(abs(qb_ratio(tr.pair(), complex(k))) - 1) < 1e-8


def test_focusing_realline():
    ks = np.linspace(-5, 5, 200)
    assert focusing_realline_check(ZP, ks)
    assert focusing_realline_check(soliton_pair(soliton_params(0.2, 3.0)), ks)
    assert focusing_realline_check(GAP.pair(), ks)
    with pytest.raises(ValueError):
        focusing_realline_check(zero_pair(1.0, lam=1), ks)


@settings(max_examples=10)
@given(st.floats(0.2, 2.0), st.floats(0.5, 4.0), st.floats(-2, 2), st.floats(-2, 2))
def test_focusing_real_G_nonpositive(alpha, omega, cr, ci):
    tr = ExponentialTriple(alpha, omega, complex(cr, ci), -1)
    assert focusing_realline_check(tr.pair(), np.linspace(-3, 3, 40))
