"""Score the five parameter/inference combinations on unbelievable random targets
and print median distances per model."""
import argparse
import json
from pathlib import Path

from bethebp import CompareOptions, LearnOptions, comparison_csv, five_model_comparison, run_metadata


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--max-attempts", type=int, default=10)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--outdir", default="results/model_comparison")
    a = ap.parse_args(argv)

    out = Path(a.outdir)
    out.mkdir(parents=True, exist_ok=True)
    opts = CompareOptions(learn=LearnOptions(epsilon=a.epsilon, iters=a.iters), max_attempts=a.max_attempts)
    res = five_model_comparison(a.trials, base_seed=a.seed, options=opts, threads=a.threads)
    meta = run_metadata(script="model_comparison", seed=a.seed, trials=a.trials, options=opts.to_json())
    (out / "records.csv").write_text(comparison_csv(res, meta))
    summary = res.summary()
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    for key in ("bethe_divergence", "euclidean_distance"):
        print(key, {m: f"{v:.3g}" for m, v in res.medians(key).items()})


if __name__ == "__main__":
    main()
