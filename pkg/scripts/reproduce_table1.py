"""Print the pivotality table of network example 1 (s=1, t=4) next to the reference values."""

import numpy as np

from avoidance_markov import build_chain, example1, rank

REFERENCE = {
    "shp": (-1, -1, 0),
    "mf": (0.5, 0.5, 0.5),
    "ch": (-3.5, -3.5, -3.5),
    "ath": (-0.5, -0.5, 0.5),
}


def main():
    g = example1()
    rep = rank(build_chain(g), g, g.index("1"), g.index("4"), tuple(REFERENCE))
    nodes = ("2", "3", "5")
    print("metric " + " ".join(f"{k:>8}" for k in nodes) + "   max|diff|")
    for metric, ref in REFERENCE.items():
        got = [rep.value(metric, k) for k in nodes]
        diff = max(abs(a - b) for a, b in zip(got, ref))
        print(f"{metric:<6} " + " ".join(f"{v:>8.4g}" for v in got) + f"   {diff:.1e}")
    print("ranking by ath:", " > ".join(g.label(k) for k in rep.ranking))
    print("feasibility:", {g.label(k): round(v, 6) for k, v in rep.feasibility.items()})
    assert all(np.isfinite(list(rep.scores["ath"].values())))


if __name__ == "__main__":
    main()
