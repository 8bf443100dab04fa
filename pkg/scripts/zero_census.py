"""Zero census of G for the zero pair with omega = 4 (tau = pi/2).

The zeros are +-sqrt(n), +-i sqrt(n) (double) and an order-4 zero at 0.
"""
import argparse
import math

from nlsfloquet.background import zero_pair
from nlsfloquet.spectrum import zero_census


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--half", type=float, default=2.9, help="window half-side")
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args(argv)
    h = args.half
    cen = zero_census(zero_pair(math.pi / 2), (-h, h, -h, h), tol=args.tol)
    print(f"total winding {cen.total_winding}, {cen.n_evals} evaluations")
    for r in sorted(cen.records, key=lambda r: (abs(r.location), r.location.real)):
        print(f"{r.location.real:+.8f} {r.location.imag:+.8f}i  mult {r.multiplicity}  |k|^2 {abs(r.location)**2:.6f}")
    for n in cen.notes:
        print("note:", n)


if __name__ == "__main__":
    main()
