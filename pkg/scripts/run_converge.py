"""Run the converge study with its default settings; extra flags pass through."""
import sys

from cutfem_lb.cli import main

if __name__ == "__main__":
    sys.exit(main(["--experiment", "converge", "--out", "converge.csv", *sys.argv[1:]]))
