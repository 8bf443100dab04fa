"""Decay of mu1 - E for a soliton background with a (1+t)^-3.5 perturbation.

Prints the fitted log-log slope of max|mu1 - E| per k; the expected value is -5/2.
"""
import argparse

import numpy as np

from nlsfloquet.halfline_spectral import BoundaryTraces, volterra_column
from nlsfloquet.soliton import soliton_pair, soliton_params


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=1e-2)
    ap.add_argument("-T", type=float, default=400.0)
    ap.add_argument("--fit", type=float, nargs=2, default=(20.0, 100.0))
    args = ap.parse_args(argv)
    p = soliton_params(0.5, 2.0)
    pair = soliton_pair(p)
    w, eps = p.omega, args.eps
    traces = BoundaryTraces.from_pair(
        pair, args.T, n=8,
        f0=lambda t: eps * np.exp(1j * w * t) * (1 + t) ** -3.5,
        f1=lambda t: 0.5 * eps * np.exp(1j * w * t) * (1 + t) ** -3.5,
    )
    for k in (0.9 + 0.5j, 0.5 + 1j, 1.2 + 0.3j):
        r = volterra_column(pair, traces, k)
        d = np.abs(r.Psi - r.E_col).max(axis=1)
        m = (r.t >= args.fit[0]) & (r.t <= args.fit[1])
        slope = np.polyfit(np.log1p(r.t[m]), np.log(d[m]), 1)[0]
        print(f"k = {k}: slope {slope:+.3f}, series terms {len(r.term_norms)}")


if __name__ == "__main__":
    main()
