"""Classify single-exponential triples across the closed-form families.

Writes one CSV row per triple: family, parameters, pipeline verdict, tag.
"""
import argparse
import csv
import sys

import numpy as np

from nlsfloquet.exponential import ExponentialTriple, classify_triple, family_triple


def samples(n, rng):
    for a in np.linspace(0.6, 1.4, n):
        for r in (1.5, 3.0):
            yield "F-1.3a", family_triple("F-1.3a", alpha=a, omega=r * a * a, sign=1)
            yield "F-1.3b", family_triple("F-1.3b", alpha=a, omega=-6 * r * a * a / 1.5)
        yield "D-3", family_triple("D-3", alpha=a, omega=-4 * a * a)
        yield "D-4", family_triple("D-4", alpha=a, omega=2 * a * a, sign=-1)
    for _ in range(n):
        a = rng.uniform(0.6, 1.4)
        c = complex(*rng.uniform(-1, 1, 2))
        yield "random", ExponentialTriple(a, rng.uniform(-5.5, 0.9) * a * a, c, -1)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=3, help="points per family axis")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="-")
    args = ap.parse_args(argv)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh)
    w.writerow(["family", "alpha", "omega", "c_re", "c_im", "lambda", "verdict", "tag"])
    for fam, tr in samples(args.n, np.random.default_rng(args.seed)):
        v, tag = classify_triple(tr)
        w.writerow([fam, tr.alpha, tr.omega, tr.c.real, tr.c.imag, tr.lam, v.status, tag.name])
        fh.flush()


if __name__ == "__main__":
    main()
