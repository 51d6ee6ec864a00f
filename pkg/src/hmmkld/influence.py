"""Linear-time KL-divergence influence of observations on the hidden path.

The influence of observation j is the relative entropy between the
posterior of the hidden sequence computed without observation j and the
posterior computed with all observations. The whole influence vector is
obtained in O(n m^2) from the standard forward/backward vectors plus one
extra emission-free forward recursion ("star" forward). A windowed
variant removes h consecutive observations at a time in O(n h m^2).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .inference import ForwardBackward, forward_backward, posterior_marginals
from .model import HmmModel, ModelError, ObservationSequence


class LeaveOneOutImpossibleError(ArithmeticError):
    """Leave-one-out evidence has probability zero (discrete pathology)."""


@dataclass(frozen=True)
class StarForward:
    """Forward vectors with the current index's emission factor omitted.

    Row i is the propagation of the scaled forward row i-1 through the
    transition matrix (row 0 is the initial distribution), so it shares
    the cumulative log scale of forward row i-1.
    """

    fstar: np.ndarray
    log_scale: np.ndarray


@dataclass(frozen=True)
class InfluenceProfile:
    """Per-observation influence values and the marginals behind them."""

    k: np.ndarray
    loo_marginals: np.ndarray
    marginals: np.ndarray
    labels: Optional[Sequence[str]] = None

    def __len__(self) -> int:
        return self.k.size


@dataclass(frozen=True)
class WindowInfluenceProfile:
    """Influence of each window of h consecutive observations."""

    h: int
    k: np.ndarray
    labels: Optional[Sequence[str]] = None

    def __len__(self) -> int:
        return self.k.size


def forward_star(model: HmmModel, fb: ForwardBackward) -> StarForward:
    """Emission-free forward recursion driven by the standard forward rows."""
    n = len(fb)
    fstar = np.empty_like(fb.fwd)
    log_scale = np.empty(n)
    fstar[0] = model.initial
    log_scale[0] = 0.0
    fstar[1:] = fb.fwd[:-1] @ model.transition
    log_scale[1:] = fb.log_scale_fwd[:-1]
    return StarForward(fstar=fstar, log_scale=log_scale)


def loo_marginal(star: StarForward, fb: ForwardBackward, j: int) -> np.ndarray:
    """Posterior marginal of the hidden state at j given all other observations."""
    prod = star.fstar[j] * fb.bwd[j]
    total = prod.sum()
    if total == 0.0:
        raise LeaveOneOutImpossibleError(
            f"impossible leave-one-out evidence at index {j}"
        )
    return prod / total


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """sum p log(p/q) with 0 log(0/q) = 0 and p log(p/0) = +inf (never NaN)."""
    mask = p > 0
    if np.any(q[mask] == 0.0):
        return float("inf")
    ps = p[mask]
    # log(ps) - log(qs) rather than log(ps/qs): the ratio can overflow
    # when qs underflows toward the denormal range.
    return float(np.dot(ps, np.log(ps) - np.log(q[mask])))


def kld_influence(
    model: HmmModel,
    obs: ObservationSequence,
    fb: Optional[ForwardBackward] = None,
) -> InfluenceProfile:
    """Influence of every observation in one O(n m^2) pass.

    An existing ``ForwardBackward`` for the same model/observations may be
    passed to avoid recomputing it.
    """
    if fb is None:
        fb = forward_backward(model, obs)
    star = forward_star(model, fb)
    marg = posterior_marginals(fb)
    n = len(fb)
    loo = np.empty_like(marg)
    k = np.empty(n)
    for j in range(n):
        loo[j] = loo_marginal(star, fb, j)
        k[j] = kl_divergence(loo[j], marg[j])
    return InfluenceProfile(k=k, loo_marginals=loo, marginals=marg, labels=obs.labels)


def _row_normalized(mat: np.ndarray) -> np.ndarray:
    return mat / mat.sum(axis=1, keepdims=True)


def windowed_influence(
    model: HmmModel, obs: ObservationSequence, h: int
) -> WindowInfluenceProfile:
    """Influence of each window of h consecutive observations.

    Removing a window of observations leaves the hidden sub-chain over the
    window Markov under both posteriors, so the relative entropy of the
    full hidden sequence collapses to the relative entropy of the two
    sub-chain laws. That is computed by the chain rule: divergence of the
    initial window marginal plus expected divergences of the successive
    transition kernels, using emission-free backward propagation inside
    the window. Cost is O(h m^2) per window position.
    """
    n = len(obs)
    if not 1 <= h <= n:
        raise ModelError(f"window length {h} out of range [1, {n}]")
    fb = forward_backward(model, obs)
    star = forward_star(model, fb)
    marg = posterior_marginals(fb)
    alpha = model.transition
    w = fb.scaled_weights()
    num_windows = n - h + 1
    k = np.empty(num_windows)
    for j in range(num_windows):
        last = j + h - 1
        # Emission-free backward vectors inside the window, scaled by max.
        hvec = [None] * h
        hvec[h - 1] = fb.bwd[last]
        for t in range(h - 2, -1, -1):
            v = alpha @ hvec[t + 1]
            hvec[t] = v / v.max()
        # Initial marginals of the two sub-chain laws at position j.
        p_star = star.fstar[j] * hvec[0]
        total = p_star.sum()
        if total == 0.0:
            raise LeaveOneOutImpossibleError(
                f"impossible leave-out evidence for window at index {j}"
            )
        p_star = p_star / total
        total_k = kl_divergence(p_star, marg[j])
        m_star = p_star
        for t in range(h - 1):
            i = j + t
            kernel_star = _row_normalized(alpha * hvec[t + 1][None, :])
            kernel_full = _row_normalized(alpha * (w[i + 1] * fb.bwd[i + 1])[None, :])
            for s in range(model.num_states):
                if m_star[s] > 0:
                    total_k += m_star[s] * kl_divergence(
                        kernel_star[s], kernel_full[s]
                    )
            m_star = m_star @ kernel_star
        k[j] = total_k
    labels = obs.labels[: num_windows] if obs.labels is not None else None
    return WindowInfluenceProfile(h=h, k=k, labels=labels)
