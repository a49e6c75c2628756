"""Best-fitness boxplot table for probabilistic crowding on TwoMax.

    python scripts/fig1.py [--full] [--runs 100] [--seed 0] [--out-dir results]

Defaults to the desk-scale grid n = 32..1024; ``--full`` runs n up to 16384.
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
    argv = ["fig1", "--runs", a.runs, "--seed", a.seed, "--out-dir", a.out_dir]
    sys.exit(main(argv if a.full else argv + ["--small"]))
