"""Sweep the example-2 family and print k1/k2 scores for every metric.

Absolute values depend on how the example graph is reconstructed; the
script prints which of the two nodes each metric ranks higher.
"""

import argparse

from avoidance_markov import build_chain, example2, rank

METRICS = ("ath", "ch", "shp", "mf")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L2", type=int, nargs="+", default=[1, 2, 3, 5, 10, 20])
    ap.add_argument("--N2", type=int, nargs="+", default=[1, 2, 3])
    args = ap.parse_args()
    print("L2 N2 " + " ".join(f"{m + '(k1,k2)':>22}" for m in METRICS))
    for L2 in args.L2:
        for N2 in args.N2:
            g = example2(L2, N2)
            rep = rank(build_chain(g), g, g.index("s"), g.index("t"), METRICS)
            cells = []
            for m in METRICS:
                k1, k2 = rep.value(m, "k1"), rep.value(m, "k2")
                mark = "=" if abs(k1 - k2) <= 1e-12 * max(1, abs(k1)) else (">" if k1 > k2 else "<")
                cells.append(f"{k1:>9.3f} {mark} {k2:<9.3f}")
            print(f"{L2:>2} {N2:>2} " + " ".join(f"{c:>22}" for c in cells))


if __name__ == "__main__":
    main()
