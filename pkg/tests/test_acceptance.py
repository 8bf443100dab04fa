"""Acceptance criteria 1-10, one recorded pass/fail line each.

Two criteria are false or unfittable as literally stated (3 and 8). Their
literal forms are kept and expected to fail; a companion test checks the
corrected statement next to each.
"""
import time

import numpy as np
import pytest

from nlsfloquet.background import PeriodicPair, zero_pair
from nlsfloquet.exponential import ExponentialTriple, classify_triple, closed_form_Z, family_memberships, family_triple
from nlsfloquet.floquet import anchored_branch, floquet_point, monodromy
from nlsfloquet.halfline_spectral import BoundaryTraces, volterra_column
from nlsfloquet.numerics import NumericsError
from nlsfloquet.soliton import soliton_global_relation_residual, soliton_pair, soliton_params
from nlsfloquet.spectrum import qb_ratio, zero_census

SIGMA1 = np.array([[0, 1], [1, 0]])


# 1. Soliton global relation


def test_c1_soliton_global_relation(criterion):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst, n = 0.0, 0
    for gamma, omega in [(0.0, 4.0), (1.0, 2.0), (-1.0, 1.0)]:
        p = soliton_params(gamma, omega)
        drawn = 0
        while drawn < 20:
            k = complex(*rng.uniform(0.05, 2.0, 2))
            try:
                r = soliton_global_relation_residual(p, k)
            except (NumericsError, ValueError):
                continue
            worst, drawn, n = max(worst, r), drawn + 1, n + 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 1.0
    criterion("C1 soliton |bA - aB| <= 1e-10, < 1 s", ok, f"{n} points, max {worst:.2e}, {dt:.3f} s")
    assert ok


# 2. Monodromy against closed forms

C2_TRIPLES = [
    ExponentialTriple(1.0, 2.0, 1.0, -1),
    ExponentialTriple(0.7, -3.0, 0.4 + 0.9j, -1),
    ExponentialTriple(1.0, -4.0, 1j * np.sqrt(2), 1),
    ExponentialTriple(0.5, 1.5, -0.3 + 0.2j, 1),
]


def test_c2_monodromy_cross_validation(criterion):
    t0 = time.perf_counter()
    x, y = np.meshgrid(np.linspace(-1.2, 1.2, 5), np.linspace(-0.6, 0.6, 5))
    ks = (x + 1j * y).ravel()
    worst = 0.0
    for tr in C2_TRIPLES:
        Zn = monodromy(tr.pair(), ks, tol=1e-13)  # |Z| reaches 1e5 on the grid
        worst = max(worst, float(np.abs(Zn - closed_form_Z(tr, ks)).max()))
    p = soliton_params(0.0, 4.0)
    pair = soliton_pair(p)
    sol = 0.0
    for k in [0.9 + 0.4j, 0.5 + 0.8j, 1.3 + 0.2j, 0.3 + 0.3j, 1.1 + 0.6j]:
        bv = anchored_branch(pair, k, tol=1e-12)
        sol = max(sol, abs(bv.sqrtG - 2j * np.sin(2 * k * k * p.tau)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and sol <= 1e-8 and dt < 30
    criterion(
        "C2 monodromy vs closed forms <= 1e-8, < 30 s",
        ok,
        f"Z max {worst:.2e} (4 triples x 25 k), soliton sqrtG max {sol:.2e}, {dt:.1f} s",
    )
    assert ok


# 3. Zero census of the zero pair, omega = 4


@pytest.fixture(scope="module")
def zero_pair_census():
    t0 = time.perf_counter()
    c = zero_census(zero_pair(np.pi / 2), (-3.0, 3.0, -3.0, 3.0))
    return c, time.perf_counter() - t0


def _census_matches(records, expected, edge=None):
    """Compare records with an expected {location: multiplicity} map within 1e-3."""
    got = [r for r in records if edge is None or max(abs(r.location.real), abs(r.location.imag)) < edge]
    if len(got) != len(expected):
        return False
    for loc, m in expected.items():
        hit = [r for r in got if abs(r.location - loc) < 1e-3]
        if len(hit) != 1 or hit[0].multiplicity != m:
            return False
    return True


def _expected(nmax):
    exp = {0j: 4}
    for n in range(1, nmax + 1):
        s = np.sqrt(n)
        exp.update({complex(s): 2, complex(-s): 2, 1j * s: 2, -1j * s: 2})
    return exp


def test_c3_zero_census_literal(zero_pair_census, criterion):
    c, dt = zero_pair_census
    ok = (
        _census_matches(c.records, _expected(2))
        and sum(r.multiplicity for r in c.records) == c.total_winding
        and dt < 60
    )
    criterion(
        "C3 literal: exactly +-sqrt n, +-i sqrt n (n = 1, 2) plus order 4 at 0",
        ok,
        f"{len(c.records)} zeros found, total winding {c.total_winding}, {dt:.1f} s"
        " (G = -4 sin^2(pi k^2) also vanishes at n = 3..9; expected to fail)",
    )
    assert ok


def test_c3_zero_census_complete(zero_pair_census, criterion):
    c, dt = zero_pair_census
    # n = 9 sits on the window edge; the census nudges the window, so skip it either way
    ok = (
        _census_matches(c.records, _expected(8), edge=2.9)
        and sum(r.multiplicity for r in c.records) == c.total_winding
        and dt < 60
    )
    criterion(
        "C3 companion: n = 1..8 double, order 4 at 0, sum = winding",
        ok,
        f"total winding {c.total_winding}, {dt:.1f} s",
    )
    assert ok


# 4. Focusing families


def _verdicts(triples):
    return [classify_triple(tr) for tr in triples]


def test_c4_focusing_families(criterion):
    a_grid = np.linspace(0.6, 1.4, 5)
    f_a = [family_triple("F-1.3a", alpha=a, omega=a * a * r, sign=s)
           for a in a_grid for r, s in zip((1.2, 1.7, 2.3, 3.0, 4.0), (1, -1, 1, -1, 1))]
    f_b = [family_triple("F-1.3b", alpha=a, omega=-6 * a * a * r) for a in a_grid for r in (1.2, 1.8)]
    rng = np.random.default_rng(4)
    gap = []
    while len(gap) < 10:
        a = rng.uniform(0.6, 1.4)
        w = rng.uniform(-5.5, 0.9) * a * a
        c = complex(*rng.uniform(-1.0, 1.0, 2))
        gap.append(ExponentialTriple(a, w, c, -1))

    ok_a = sum(v.status == "consistent" and t.name == "F-1.3a" for v, t in _verdicts(f_a))
    ok_b = sum(v.status == "consistent" and t.name == "F-1.3b" for v, t in _verdicts(f_b))
    ok_g = 0
    for v, t in _verdicts(gap):
        odd = [w for w in v.witnesses if w.multiplicity % 2]
        ok_g += v.status == "inconsistent" and t.name == "none" and bool(odd)
    ok = ok_a == 25 and ok_b == 10 and ok_g == 10
    criterion("C4 focusing families", ok, f"F-1.3a {ok_a}/25, F-1.3b {ok_b}/10, gap inconsistent {ok_g}/10")
    assert ok


# 5. Defocusing families


def _defocusing_samples():
    out = {
        "D-1": [family_triple("D-1", alpha=a, omega=-3 * a * a * s, sign=sg)
                for a, s, sg in [(0.8, 0.3, 1), (1.0, 0.7, -1), (1.3, 0.45, 1)]],
        "D-3": [family_triple("D-3", alpha=a, omega=-3 * a * a * (1 + s)) for a, s in [(0.8, 0.2), (1.0, 0.6), (1.2, 1.1)]],
        "D-4": [family_triple("D-4", alpha=a, omega=-a * a + d, sign=sg)
                for a, d, sg in [(0.8, 0.5, 1), (1.0, 1.5, -1), (1.2, 3.0, 1)]],
    }
    for name in ("D-2", "D-5"):
        out[name] = []
        for K, s, f, sg in [(0.5, 0.3, 0.5, 1), (0.8, 0.6, 0.8, -1), (1.0, 0.5, 0.5, 1)]:
            w = -K * K * (4 + 8 * s) if name == "D-2" else -K * K * (3 + 0.98 * s)
            # sign of c2 follows from the side of -4K^2 that omega sits on
            c2 = -(4 * K * K + w) / 2 * f
            out[name].append(family_triple(name, K=K, omega=w, c2=c2, sign=sg))
    return out


def test_c5_defocusing_families(criterion):
    counts, multi = {}, 0
    for name, triples in _defocusing_samples().items():
        counts[name] = 0
        for tr in triples:
            v, tag = classify_triple(tr)
            multi += len(family_memberships(tr)) > 1
            counts[name] += v.status == "consistent" and tag.name == name
    ok = all(n >= 3 for n in counts.values()) and multi == 0
    criterion("C5 defocusing families", ok, ", ".join(f"{k} {v}/3" for k, v in sorted(counts.items())) + f", double tags {multi}")
    assert ok


# 6. Focusing pairs: G real and nonpositive on the real line


def _random_pair(rng, lam):
    tau = rng.uniform(0.8, 3.0)

    def modes():
        ns = rng.choice(np.arange(-3, 4), size=rng.integers(1, 4), replace=False)
        return tuple((int(n), complex(*rng.normal(0, 0.6, 2))) for n in ns)

    return PeriodicPair(lam, tau, modes(), modes())


def test_c6_focusing_realline(criterion):
    rng = np.random.default_rng(6)
    ks = np.linspace(-5, 5, 200).astype(complex)
    worst_re, worst_im = -np.inf, 0.0
    for _ in range(10):
        Z = monodromy(_random_pair(rng, -1), ks)
        G = (Z[:, 0, 0] + Z[:, 1, 1]) ** 2 - 4
        worst_re = max(worst_re, float(G.real.max()))
        worst_im = max(worst_im, float(np.abs(G.imag).max()))
    ok = worst_re <= 1e-9 and worst_im <= 1e-9
    criterion("C6 focusing G real and <= 1e-9 on R", ok, f"max Re G {worst_re:.2e}, max |Im G| {worst_im:.2e}")
    assert ok


# 7. Defocusing single exponentials: |Q^b| = 1 in real gaps


def test_c7_defocusing_qb_unimodular(criterion):
    triples = [
        ExponentialTriple(1.0, -2.0, 0.5, 1),
        ExponentialTriple(0.6, -3.0, 0.3 + 0.4j, 1),
        ExponentialTriple(1.0, -1.0, -0.8j, 1),
        ExponentialTriple(1.4, -3.0, 1.2, 1),
        ExponentialTriple(0.6, 1.0, 1.2, 1),
    ]
    ks = np.linspace(-2.0, 2.0, 81)
    worst, n_pts, per = 0.0, 0, []
    for tr in triples:
        pair = tr.pair()
        Z = monodromy(pair, ks.astype(complex))
        G = ((Z[:, 0, 0] + Z[:, 1, 1]) ** 2 - 4).real
        pts = ks[G > 0.1]
        per.append(len(pts))
        for k in pts:
            worst = max(worst, abs(abs(qb_ratio(pair, complex(k))) - 1))
            n_pts += 1
    ok = worst <= 1e-8 and all(m > 0 for m in per)
    criterion("C7 defocusing ||Q^b| - 1| <= 1e-8 where G > 0.1", ok, f"{n_pts} real k over 5 triples, max {worst:.2e}")
    assert ok


# 8. Volterra decay

K8 = (0.9 + 0.5j, 0.5 + 1.0j, 1.2 + 0.3j)
P8 = soliton_params(0.5, 2.0)


def _decay_slopes(f0, f1, window=(20.0, 100.0)):
    pair = soliton_pair(P8)
    tr = BoundaryTraces.from_pair(pair, 400.0, n=8, f0=f0, f1=f1)
    out = []
    for k in K8:
        r = volterra_column(pair, tr, k)
        d = np.abs(r.Psi - r.E_col).max(axis=1)
        m = (r.t >= window[0]) & (r.t <= window[1])
        with np.errstate(divide="ignore"):
            y = np.log(d[m])
        out.append(float(np.polyfit(np.log1p(r.t[m]), y, 1)[0]) if np.all(np.isfinite(y)) else np.nan)
    return np.array(out)


def test_c8_volterra_decay_compact_bump(criterion):
    def bump(t):
        s = np.asarray(t, float) - 2.0
        out = np.zeros_like(s)
        m = np.abs(s) < 1
        out[m] = np.exp(1 - 1 / (1 - s[m] ** 2))
        return 1e-2 * out

    sl = _decay_slopes(bump, bump)
    ok = bool(np.all(np.abs(sl + 2.5) <= 0.3))
    criterion(
        "C8 literal: compact bump, slope -5/2 +- 0.3",
        ok,
        f"slopes {np.round(sl, 3).tolist()} (mu1 - E vanishes past the bump; expected to fail)",
    )
    assert ok


def test_c8_volterra_decay_algebraic_tail(criterion):
    w, eps = P8.omega, 1e-2
    sl = _decay_slopes(
        lambda t: eps * np.exp(1j * w * t) * (1 + t) ** -3.5,
        lambda t: 0.5 * eps * np.exp(1j * w * t) * (1 + t) ** -3.5,
    )
    ok = bool(np.all(np.abs(sl + 2.5) <= 0.3))
    criterion("C8 companion: (1+t)^-3.5 perturbation, slope -5/2 +- 0.3", ok, f"slopes {np.round(sl, 3).tolist()}")
    assert ok


# 9. Conjugation symmetries


def test_c9_conjugation_symmetries(criterion):
    rng = np.random.default_rng(9)
    worst = {"Z": 0.0, "G": 0.0, "z": 0.0, "Ab": 0.0}
    n = skipped = 0
    while n < 100:
        pair = _random_pair(rng, int(rng.choice([-1, 1])))
        k = complex(rng.uniform(-1.2, 1.2), rng.uniform(0.1, 1.0))
        # Z(conj k) is integrated on its own, not reflected
        Z, Zc = monodromy(pair, np.array([k, k.conjugate()]), tol=1e-12)
        L = np.diag([1, pair.lam])
        sc = max(1.0, float(np.abs(Z).max()))
        worst["Z"] = max(worst["Z"], float(np.abs(Zc - L @ SIGMA1 @ Z.conj() @ SIGMA1 @ L).max()) / sc)
        G, Gc = (Z[0, 0] + Z[1, 1]) ** 2 - 4, (Zc[0, 0] + Zc[1, 1]) ** 2 - 4
        worst["G"] = max(worst["G"], abs(Gc - np.conj(G)) / sc**2)
        try:
            f = floquet_point(pair, k, tol=1e-12)
            fc = floquet_point(pair, k.conjugate(), tol=1e-12)
        except NumericsError:
            skipped += 1
            continue
        # 1/conj(z(k)) must be an eigenvalue of the independently computed Z(conj k)
        w = 1 / np.conj(f.z)
        ev = abs(w * w - (fc.Z[0, 0] + fc.Z[1, 1]) * w + 1) / max(1.0, abs(w)) ** 2
        worst["z"] = max(worst["z"], ev, abs(fc.z - w) / max(1.0, abs(w)))
        if f.Sb is not None and fc.Sb is not None:
            worst["Ab"] = max(worst["Ab"], abs(fc.Sb[1, 1] - np.conj(f.Sb[1, 1])))
        n += 1
    ok = all(v <= 1e-9 for v in worst.values())
    criterion(
        "C9 conjugation symmetries <= 1e-9",
        ok,
        f"{n} draws ({skipped} skipped at branch points), " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()),
    )
    assert ok


# 10. Out of scope


def test_c10_out_of_scope(criterion):
    criterion(
        "C10 out of scope",
        True,
        "long-time PDE asymptotics and Riemann-Hilbert admissibility are not reproduced; criteria 1-9 stand in",
    )
    pytest.skip("long-time asymptotics of quarter-plane solutions and RH-based admissibility are out of scope")
