#!/usr/bin/env python3
"""Compare detector-cutoff planners for a target systematic error.

Squeezed pairs get the exact-tail threshold; coherent pairs are planned
three ways (Chernoff bound, normal-quantile approximation, exact Poisson
tail) so their thresholds and certified bounds can be compared.
"""

import argparse

from cvswap import estimators as est


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-4, 1e-6])
    parser.add_argument("--r", type=float, default=1.0, help="squeezing strength")
    parser.add_argument("--energy", type=float, default=36.0, help="coherent |alpha|^2")
    args = parser.parse_args()

    print(f"squeezed pair, r = {args.r}")
    for eps in args.eps:
        plan = est.cutoff_for_squeezed(args.r, eps)
        print(f"  eps {eps:.0e}: M = {plan.M:4d}  bound {plan.bound:.3e}  "
              f"(large-r sufficient value {plan.reference_m})")

    print(f"coherent pair, energy = {args.energy}")
    for eps in args.eps:
        rows = [est.cutoff_for_coherent_chernoff(args.energy, eps),
                est.cutoff_for_coherent_exact(args.energy, eps)]
        if args.energy >= 25:
            rows.insert(1, est.cutoff_for_coherent_normal(args.energy, eps))
        for plan in rows:
            print(f"  eps {eps:.0e} [{plan.method:>16}]: M = {plan.M:4d}  bound {plan.bound:.3e}")


if __name__ == "__main__":
    main()
