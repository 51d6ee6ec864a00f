"""
Benchmarking outlier detectors with a semi-parametric simulation
================================================================

Three global statistics compete at telling a clean series from one with
a few corrupted points:

  * t_kld — the maximum KL influence K_j after refitting an HMM to the
    replicate (the statistic this package is about);
  * s_z   — the largest absolute cluster z-score (k-means clusters);
  * l_lof — the largest local outlier factor over a grid of
    neighborhood sizes, on standardized (time, value) points.

Each H0 replicate is a random subsample of a source series; each H1
replicate additionally perturbs ~5% of its points with N(0, delta^2)
noise.  The empirical AUC measures how well each statistic separates
the two hypotheses.

This demo uses a small replicate count so it finishes in about a
minute; increase `replicates` for tighter AUC estimates.

Run with:  python3 demos/03_outlier_benchmark.py
"""

import time

import numpy as np

from hmmkld import (
    GaussianEmission,
    HmmModel,
    SimulationConfig,
    run_benchmark,
    sample,
)

# ----------------------------------------------------------------------
# Source series: sampled once from a reference three-state chain.  In a
# real study this would be a measured series loaded from CSV.
# ----------------------------------------------------------------------
source_model = HmmModel(
    initial=np.full(3, 1.0 / 3.0),
    transition=np.array(
        [
            [0.915, 0.0425, 0.0425],
            [0.0425, 0.915, 0.0425],
            [0.0425, 0.0425, 0.915],
        ]
    ),
    emission=GaussianEmission.homoscedastic([-0.372, 0.069, -0.068], 0.114),
)
_, source = sample(source_model, 106, seed=99)

config = SimulationConfig(
    source=source.values,
    subsample_size=53,
    contamination=0.05,
    replicates=60,
    seed=5,
    em_restarts=5,
)
deltas = [0.5, 2.0, 3.0]

# ----------------------------------------------------------------------
# Run the grid.  The null replicates do not depend on delta, so they are
# simulated once and reused for every row of the table.
# ----------------------------------------------------------------------
start = time.perf_counter()
rows = run_benchmark(config, deltas)
elapsed = time.perf_counter() - start
print(
    f"{config.replicates} replicates per hypothesis, "
    f"{len(deltas)} noise levels, {elapsed:.1f}s total\n"
)

print(f"{'method':<8}{'delta':>7}{'AUC':>8}   95% CI")
for row in rows:
    print(
        f"{row.method:<8}{row.delta:>7.1f}{row.auc:>8.3f}   "
        f"[{row.ci_lower:.3f}, {row.ci_upper:.3f}]"
    )

# ----------------------------------------------------------------------
# Expected picture: all methods hover near chance for small delta; as
# the injected noise grows, LOF and the KL influence statistic pull
# ahead of the cluster z-score, whose fixed clustering dilutes isolated
# corruptions.
# ----------------------------------------------------------------------
kld = {row.delta: row.auc for row in rows if row.method == "kld"}
print(
    f"\nKL influence AUC rises with delta: "
    + " -> ".join(f"{kld[d]:.3f}" for d in deltas)
)
