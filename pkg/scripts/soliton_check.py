"""Global-relation residuals for the one-soliton at random k."""
import argparse

import numpy as np

from nlsfloquet.numerics import NumericsError
from nlsfloquet.soliton import soliton_global_relation_residual, soliton_params


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--omega", type=float, default=2.0)
    ap.add_argument("-n", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    p = soliton_params(args.gamma, args.omega)
    rng = np.random.default_rng(args.seed)
    res = []
    for _ in range(args.n):
        k = complex(*rng.uniform(0.05, 2, 2))
        try:
            r = soliton_global_relation_residual(p, k)
        except (NumericsError, ValueError) as exc:
            print(f"{k:.4f}: skipped ({type(exc).__name__})")
            continue
        res.append(r)
        print(f"{k:.4f}: {r:.3e}")
    if res:
        print(f"max residual {max(res):.3e} over {len(res)} points")


if __name__ == "__main__":
    main()
