"""
Fitting a Gaussian HMM with Baum-Welch EM
=========================================

This script samples data from a known three-state homoscedastic chain,
refits it from scratch with expectation-maximization, and compares the
recovered parameters with the truth.  It also shows the model document
format used to exchange fitted models with the command-line tool.

Run with:  python3 demos/02_training.py
"""

import numpy as np

from hmmkld import (
    EmConfig,
    GaussianEmission,
    HmmModel,
    canonical_state_order,
    em_fit,
    reorder_states,
    sample,
)
from hmmkld.serialize import dump_model

# ----------------------------------------------------------------------
# Ground truth: tied transitions (one stay/switch rate shared by all
# states) and a single shared emission standard deviation.
# ----------------------------------------------------------------------
eta = 0.085
truth = HmmModel(
    initial=np.full(3, 1.0 / 3.0),
    transition=np.array(
        [
            [1 - eta, eta / 2, eta / 2],
            [eta / 2, 1 - eta, eta / 2],
            [eta / 2, eta / 2, 1 - eta],
        ]
    ),
    emission=GaussianEmission.homoscedastic([-0.372, 0.069, -0.068], 0.114),
)
_, obs = sample(truth, 3000, seed=20)

# ----------------------------------------------------------------------
# EM with multiple random restarts.  Each restart initializes the means
# by one-dimensional k-means on the observed values plus a small jitter,
# then iterates E and M steps until the log-likelihood stalls.  The best
# restart by final log-likelihood wins.
# ----------------------------------------------------------------------
config = EmConfig(
    num_states=3,
    tie_transitions=True,
    homoscedastic=True,
    num_restarts=10,
    seed=1,
)
result = em_fit(obs, config)
print(
    f"best of {config.num_restarts} restarts: restart {result.restart_index}, "
    f"{len(result.log_likelihoods)} iterations, "
    f"converged={result.converged}"
)
print(f"final log-likelihood {result.log_likelihoods[-1]:.2f}")

# State order is arbitrary after EM, so sort states by emission mean
# before comparing against the truth.
fitted = reorder_states(result.model, canonical_state_order(result.model))
truth_sorted = reorder_states(truth, canonical_state_order(truth))

print("\nparameter recovery (fitted vs true):")
for s in range(3):
    print(
        f"  mu_{s + 1}: {fitted.emission.means[s]:8.4f}  vs "
        f"{truth_sorted.emission.means[s]:8.4f}"
    )
print(f"  sigma: {fitted.emission.sigmas[0]:8.4f}  vs {0.114:8.4f}")
print(f"  eta:   {1 - fitted.transition[0, 0]:8.4f}  vs {eta:8.4f}")

# ----------------------------------------------------------------------
# The EM log-likelihood must never decrease; the trace makes that easy
# to eyeball.
# ----------------------------------------------------------------------
lls = np.array(result.log_likelihoods)
print(f"\nworst per-iteration change: {np.diff(lls).min():+.2e} (>= 0 expected)")

# ----------------------------------------------------------------------
# Serialized model document: a plain-text, byte-stable format that the
# `hmmkld` CLI reads and writes.
# ----------------------------------------------------------------------
print("\nmodel document:")
print(dump_model(fitted))
