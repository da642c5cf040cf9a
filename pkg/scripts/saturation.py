"""W - W_tilde against tau2 for several T_C (|W| is in the CSV), and the tau_min(T_C) power law at epsilon = 2."""
import sys

from critotto.cli import main

BASE = ["--L", "100", "--h1", "10", "--h2", "1", "--Th", "1000", "--tau1", "10"]

if __name__ == "__main__":
    extra = sys.argv[1:]
    for tc in ("0.5", "1", "2", "5"):
        code = main(["sweep", *BASE, "--Tc", tc, "--axis", "tau2", "--grid", "log:1:1000:40",
                     "--plot", "work_vs_tau2.svg", "--out-dir", f"results/saturation/Tc_{tc}", *extra])
        if code:
            sys.exit(code)
    sys.exit(main(["taumin", *BASE, "--Tc-grid", "log:0.3:10:12", "--epsilon", "2",
                   "--fit-window", "0.3:10", "--plot", "--out-dir", "results/saturation/taumin",
                   *extra]))
