"""RTS success-count tables (both distances) over the mu x w grid at n = 100.

    python scripts/fig2.py [--full] [--runs 100] [--seed 0] [--out-dir results]

Defaults to mu <= 128; ``--full`` covers mu up to 1024, which takes hours on one core.
"""
import argparse
import sys

from nichelab.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--runs", default="100")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--out-dir", default="results")
    a = ap.parse_args()
    argv = ["fig2", "--runs", a.runs, "--seed", a.seed, "--out-dir", a.out_dir]
    sys.exit(main(argv if a.full else argv + ["--small"]))
