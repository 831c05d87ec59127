"""Offline evaluation protocol on a synthetic popularity-skewed dataset.

Runs the cold-start split, three of the five models, the metric suite, and
the paired significance tests; prints the mean +/- std table. Point --data
at a real MovieLens-1M directory (users.dat/movies.dat/ratings.dat) to run
the full protocol instead: `engine eval --data DIR --out reports/`.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from synth import synthetic_dataset

from cogrec.config import EngineConfig
from cogrec.evalharness import emit_report, run_protocol, significance

config = EngineConfig(embedding_dim=64, eval_ks=(10, 20, 50),
                      pool_sizes=(100, 100, 100))
dataset = synthetic_dataset(n_users=300, n_movies=400, seed=1,
                            ratings_per_user=(10, 25))
print(f"synthetic dataset: {len(dataset.users)} users, {len(dataset.movies)} movies, "
      f"{len(dataset.ratings)} ratings")

report = run_protocol(dataset, models=("random", "popularity", "embedding_cosine"),
                      seeds=3, config=config)

out_dir = Path("/tmp/cogrec-eval")
emit_report(report, out_dir)
print()
print((out_dir / "results_table.txt").read_text())

pop = report.per_seed["popularity"][0].per_user["hr@10"]
rnd = report.per_seed["random"][0].per_user["hr@10"]
sig = significance(pop, rnd)
print(f"popularity vs random on HR@10 (seed 0, paired over "
      f"{sig.n} cold users):")
print(f"  t-test p = {sig.t_p:.3e}, wilcoxon p = {sig.wilcoxon_p:.3e}, "
      f"cohen's d = {sig.cohens_d:.3f} (alpha = {sig.alpha})")
