"""ATH pivotality of every node of a fat-tree for one host pair; writes a DOT file."""

import argparse
import time

from avoidance_markov.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--arity", type=int, default=6)
    ap.add_argument("--source", default="host0_0_0")
    ap.add_argument("--target", default=None, help="default: the last host")
    ap.add_argument("--out", default="fat_tree.dot")
    args = ap.parse_args()
    h = args.arity
    target = args.target or f"host{h - 1}_{h // 2 - 1}_{h // 2 - 1}"
    t0 = time.perf_counter()
    code = cli_main(
        ["pivotality", "--gen", f"fat-tree:{h}", "--source", args.source, "--target", target,
         "--metrics", "ath", "--output", "dot", "--out", args.out]
    )
    print(f"wrote {args.out} in {time.perf_counter() - t0:.2f}s (exit {code})")
    cli_main(["pivotality", "--gen", f"fat-tree:{h}", "--source", args.source, "--target", target, "--metrics", "ath"])


if __name__ == "__main__":
    main()
