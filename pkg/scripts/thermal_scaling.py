"""W - W_tilde against T_C at tau2 = 100, with the LZ x tanh overlay and the tau2 inset.

Writes results/thermal/{tc,tau2,overlay}/ with CSV, fit, SVG and manifest.
"""
import sys

from critotto.cli import main

BASE = ["--L", "100", "--h1", "10", "--h2", "1", "--Th", "1000", "--tau1", "10"]

RUNS = [
    ["sweep", *BASE, "--tau2", "100", "--axis", "Tc", "--grid", "log:0.1:100:40",
     "--fit-window", "10:100", "--plot", "excess_vs_Tc.svg", "--out-dir", "results/thermal/tc"],
    ["sweep", *BASE, "--Tc", "1", "--axis", "tau2", "--grid", "log:10:100:11",
     "--fit-window", "10:100", "--plot", "excess_vs_tau2.svg", "--out-dir", "results/thermal/tau2"],
    ["analytic", *BASE, "--tau2", "100", "--Tc-grid", "log:0.1:100:40", "--fit-window", "5:100",
     "--out-dir", "results/thermal/overlay"],
]

if __name__ == "__main__":
    extra = sys.argv[1:]
    for argv in RUNS:
        code = main(argv + extra)
        if code:
            sys.exit(code)
