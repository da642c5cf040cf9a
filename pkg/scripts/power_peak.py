"""|P| = |W_tilde| / tau_min over T_C in [0.2, 20]; reports where the maximum sits.

Pass --power-denominator or a wider --Tc-grid after the script name to explore
alternatives; later flags override the defaults below.
"""
import sys

from critotto.cli import main

ARGS = ["taumin", "--L", "100", "--h1", "10", "--h2", "1", "--Th", "1000", "--tau1", "10",
        "--Tc-grid", "log:0.2:20:15", "--epsilon", "2", "--fit-window", "0.3:10", "--plot",
        "--out-dir", "results/power"]

if __name__ == "__main__":
    sys.exit(main(ARGS + sys.argv[1:]))
