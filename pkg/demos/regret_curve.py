"""Regret of planning with corrupted inputs, as a function of the corruption.

Usage: python3 demos/regret_curve.py [n_instances]

Prints the mean realized regret (demand corrupted) and mean objective
regret (route costs corrupted) for each corruption level.  The default of 8
instances runs in well under a minute; 30 matches the acceptance suite.
"""

import sys

import numpy as np

from irpdfl.training import sweep_regret_vs_error


def main(count=8):
    eps = np.round(np.arange(0.0, 0.5001, 0.1), 2)
    rep = sweep_regret_vs_error(count, eps, trials=1, seed=0)
    grid, realized = rep.mean_by_epsilon("realized_regret")
    _, objective = rep.mean_by_epsilon("objective_regret")
    print(f"{'eps':>5} {'realized':>10} {'objective':>10}")
    for e, r, o in zip(grid, realized, objective):
        print(f"{e:5.2f} {r:10.3f} {o:10.3f}")
    print(f"skipped {len(rep.skipped)} trials; spearman(eps, realized) = {rep.trend():.3f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 8)
