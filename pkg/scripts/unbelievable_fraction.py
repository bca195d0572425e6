"""Fraction of random 8-node targets whose Bethe Hessian is not positive definite,
as a function of the coupling spread."""
import argparse

from bethebp.cli import main as cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/unbelievable_fraction.csv")
    a = ap.parse_args(argv)
    return cli(["sweep-fraction", "--trials", str(a.trials), "--threads", str(a.threads),
                "--seed", str(a.seed), "--out", a.out])


if __name__ == "__main__":
    raise SystemExit(main())
