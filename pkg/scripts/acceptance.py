"""Print one PASS/FAIL line per acceptance criterion; exit 3 if any fails."""
import sys

from nichelab.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify", *sys.argv[1:]]))
