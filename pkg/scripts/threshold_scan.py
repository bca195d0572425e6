"""Scan the uniform coupling of the symmetric 4-node model and report where the
Bethe Hessian at the exact marginals loses positive definiteness."""
import argparse
import csv
import sys

import numpy as np

from bethebp import exact_marginals, min_eigenpair, bethe_hessian, rho_closed_form, symmetric_four_node


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--start", type=float, default=0.0)
    ap.add_argument("--stop", type=float, default=1.0)
    ap.add_argument("--step", type=float, default=0.002)
    ap.add_argument("--out", default=None, help="CSV path; stdout when absent")
    a = ap.parse_args(argv)

    grid = np.round(np.arange(a.start, a.stop + a.step / 2, a.step), 10)
    rows = []
    for J in grid:
        lam = min_eigenpair(bethe_hessian(exact_marginals(symmetric_four_node(J)))).lambda_min
        rows.append((repr(float(J)), repr(rho_closed_form(J)), repr(lam)))
    f = open(a.out, "w", newline="") if a.out else sys.stdout
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["J", "rho", "lambda_min"])
    w.writerows(rows)
    lam = np.array([float(r[2]) for r in rows])
    flips = np.nonzero(np.diff(np.sign(lam)) != 0)[0]
    for k in flips:
        J0, J1 = grid[k], grid[k + 1]
        root = J0 - lam[k] * (J1 - J0) / (lam[k + 1] - lam[k])
        print(f"lambda_min changes sign near J={root:.5f}", file=sys.stderr)


if __name__ == "__main__":
    main()
