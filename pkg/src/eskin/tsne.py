"""Exact t-SNE for 2-D embedding of learned tactile features.

The O(N²) variant: per-point Gaussian bandwidths found by binary search
until each point's perplexity matches the target to within 1e-3, then
gradient descent on the KL divergence to a Student-t neighbor
distribution, with early exaggeration and sign-adaptive gains.
"""

from __future__ import annotations

import numpy as np

PERPLEXITY_TOL = 1e-3
MAX_SEARCH_STEPS = 200
EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8
MIN_GAIN = 0.01
P_FLOOR = 1e-12


class DegenerateInputError(ValueError):
    """Input points do not admit a t-SNE embedding."""


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    s = np.sum(x**2, axis=1)
    d2 = s[:, None] + s[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def _row_perplexity(d2_row: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Perplexity exp(H) and conditional probabilities for one point.

    The exponent is shifted by the nearest-neighbor distance so the
    nearest term never underflows; the shift cancels in normalization.
    """
    p = np.exp(-(d2_row - d2_row.min()) * beta)
    p /= p.sum()
    nz = p[p > 0]
    entropy = -np.sum(nz * np.log(nz))
    return float(np.exp(entropy)), p


def conditional_probabilities(d2: np.ndarray, perplexity: float
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Binary-search each point's precision beta so its perplexity hits
    the target within PERPLEXITY_TOL; returns (P conditional, betas)."""
    n = d2.shape[0]
    p = np.zeros((n, n))
    betas = np.ones(n)
    for i in range(n):
        row = np.delete(d2[i], i)
        beta, lo, hi = betas[i - 1] if i else 1.0, 0.0, np.inf
        for _ in range(MAX_SEARCH_STEPS):
            perp, probs = _row_perplexity(row, beta)
            if abs(perp - perplexity) <= PERPLEXITY_TOL:
                break
            if perp > perplexity:      # too flat: sharpen
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = (beta + lo) / 2.0
        else:
            raise DegenerateInputError(
                f"perplexity search failed at point {i} "
                f"(reached {perp:.4f}, target {perplexity})")
        betas[i] = beta
        p[i, np.arange(n) != i] = probs
    return p, betas


def tsne_embed(features: np.ndarray, perplexity: float = 30.0,
               iterations: int = 1000, seed: int = 0,
               learning_rate: float = 200.0) -> np.ndarray:
    """Embed (N, D) features into (N, 2); deterministic given the seed."""
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    if n < 5:
        raise ValueError(f"need at least 5 points, got {n}")
    if perplexity >= (n - 1) / 3.0:
        raise ValueError(
            f"perplexity {perplexity} too large for {n} points")
    d2 = _pairwise_sq_dists(x)
    if np.max(d2) == 0.0:
        raise DegenerateInputError("all input points are identical")

    cond, _ = conditional_probabilities(d2, perplexity)
    p = (cond + cond.T) / (2.0 * n)
    p = np.maximum(p, P_FLOOR)

    rng = np.random.default_rng(seed)
    y = rng.normal(0.0, 1e-4, (n, 2))
    update = np.zeros_like(y)
    gains = np.ones_like(y)

    p_run = p * EXAGGERATION
    for it in range(iterations):
        if it == EXAGGERATION_ITERS:
            p_run = p
        num = 1.0 / (1.0 + _pairwise_sq_dists(y))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), P_FLOOR)

        pq = (p_run - q) * num
        grad = 4.0 * ((np.diag(pq.sum(axis=1)) - pq) @ y)

        momentum = MOMENTUM_EARLY if it < EXAGGERATION_ITERS else MOMENTUM_LATE
        flip = np.sign(grad) != np.sign(update)
        gains = np.where(flip, gains + 0.2, gains * 0.8)
        gains = np.maximum(gains, MIN_GAIN)
        update = momentum * update - learning_rate * gains * grad
        y = y + update
        y = y - y.mean(axis=0)
    return y


def kl_divergence(features: np.ndarray, embedding: np.ndarray,
                  perplexity: float = 30.0) -> float:
    """KL(P || Q) of an embedding; the quantity t-SNE descends."""
    d2 = _pairwise_sq_dists(np.asarray(features, dtype=np.float64))
    cond, _ = conditional_probabilities(d2, perplexity)
    n = d2.shape[0]
    p = np.maximum((cond + cond.T) / (2.0 * n), P_FLOOR)
    num = 1.0 / (1.0 + _pairwise_sq_dists(embedding))
    np.fill_diagonal(num, 0.0)
    q = np.maximum(num / num.sum(), P_FLOOR)
    return float(np.sum(p * np.log(p / q)))


def embedding_to_csv(embedding: np.ndarray, labels) -> str:
    lines = ["id,label,x,y"]
    for i, (x, y) in enumerate(embedding):
        label = labels[i] if labels is not None else ""
        lines.append(f"{i},{label},{x:.6f},{y:.6f}")
    return "\n".join(lines) + "\n"
