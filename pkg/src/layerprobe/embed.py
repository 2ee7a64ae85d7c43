"""Exact t-SNE for 2-D export of pooled phoneme representations.

Per-point Gaussian bandwidths are found by bisection on log-perplexity;
the joint P is symmetrized and the Student-t Q embedding is optimized by
gradient descent with momentum and early exaggeration.

Initialization is keyed per row by a stable hash of the row's bytes, and
all reductions run in a canonical internal order (rows sorted by hash),
so permuting the input rows permutes the output rows exactly.
"""

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

EPS = 1e-12


@dataclass
class EmbedConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 250:
            raise ValueError("need at least 250 iterations")
        if self.perplexity < 5:
            raise ValueError("perplexity must be >= 5")


@dataclass
class EmbedResult:
    points: np.ndarray  # n x 2
    final_kl: float
    kl_trace: np.ndarray
    metadata: list = field(default_factory=list)


def _row_hashes(X, seed):
    out = np.empty(len(X), dtype=np.uint64)
    seed_b = seed.to_bytes(8, "little", signed=False)
    for i, row in enumerate(X):
        h = hashlib.sha256(seed_b + row.tobytes()).digest()
        out[i] = int.from_bytes(h[:8], "little")
    return out


def _hashed_init(X, seed):
    """Per-row deterministic Gaussian init, sigma = 1e-4."""
    pts = np.empty((len(X), 2))
    seed_b = seed.to_bytes(8, "little", signed=False)
    for i, row in enumerate(X):
        h = hashlib.sha256(b"init" + seed_b + row.tobytes()).digest()
        key = int.from_bytes(h[:16], "little")
        rng = np.random.Generator(np.random.Philox(key=key))
        pts[i] = 1e-4 * rng.standard_normal(2)
    return pts


def _conditional_p(D2, perplexity, tol=1e-4, max_steps=64):
    """Row-stochastic conditional P via bisection on log-perplexity."""
    n = D2.shape[0]
    target = np.log(perplexity)
    P = np.zeros_like(D2)
    for i in range(n):
        d = np.delete(D2[i], i)
        if d.max() <= 0:
            raise ValueError(
                "row %d has no distinct neighbors; perplexity infeasible"
                % i)
        lo, hi = 0.0, np.inf
        beta = 1.0  # precision 1 / (2 sigma^2)
        for _ in range(max_steps):
            w = np.exp(-(d - d.min()) * beta)
            sw = w.sum()
            p = w / sw
            # Shannon entropy of the conditional distribution
            ent = -np.sum(p * np.log(np.maximum(p, EPS)))
            if abs(ent - target) < tol:
                break
            if ent > target:
                lo = beta
                beta = beta * 2 if not np.isfinite(hi) else (lo + hi) / 2
            else:
                hi = beta
                beta = (lo + hi) / 2
        row = np.insert(p, i, 0.0)
        P[i] = row
    return P


def tsne(X, config, metadata=None):
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if n < 50:
        raise ValueError("need at least 50 rows, got %d" % n)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite input")
    if config.perplexity > (n - 1) / 3:
        raise ValueError("perplexity %g infeasible for n=%d"
                         % (config.perplexity, n))

    hashes = _row_hashes(X, config.seed)
    order = np.lexsort((np.arange(n), hashes))
    Xo = X[order]

    sq = (Xo * Xo).sum(axis=1)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2 * Xo @ Xo.T, 0.0)
    Pc = _conditional_p(D2, config.perplexity)
    P = (Pc + Pc.T) / (2 * n)
    P = np.maximum(P, EPS)

    Y = _hashed_init(Xo, config.seed)
    vel = np.zeros_like(Y)
    kl_trace = np.empty(config.iterations)
    for it in range(config.iterations):
        exaggeration = (config.early_exaggeration
                        if it < config.exaggeration_iters else 1.0)
        momentum = 0.5 if it < 250 else 0.8
        ysq = (Y * Y).sum(axis=1)
        num = 1.0 / (1.0 + np.maximum(
            ysq[:, None] + ysq[None, :] - 2 * Y @ Y.T, 0.0))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), EPS)
        kl_trace[it] = float(np.sum(P * np.log(P / Q)))
        W = (exaggeration * P - Q) * num
        grad = 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError(
                "non-finite t-SNE gradient at iteration %d" % it)
        vel = momentum * vel - config.learning_rate * grad
        Y = Y + vel
        Y = Y - Y.mean(axis=0)

    Y = Y - Y.mean(axis=0)
    inverse = np.empty(n, dtype=int)
    inverse[order] = np.arange(n)
    points = Y[inverse]
    return EmbedResult(points=points, final_kl=float(kl_trace[-1]),
                       kl_trace=kl_trace,
                       metadata=list(metadata) if metadata else [])


def export_points(result, path):
    """CSV with x, y and per-point metadata (accent, speaker, phoneme,
    layer); 9 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["x", "y", "accent", "speaker", "phoneme", "layer"])
        if len(result.points) == 0:
            return
        for i, (x, y) in enumerate(result.points):
            meta = (result.metadata[i] if i < len(result.metadata)
                    else ("", "", "", ""))
            w.writerow(["%.9g" % x, "%.9g" % y, *meta])
