"""Projection-weighted CCA between pooled representations and phoneme labels.

The canonical directions are found by whitening both views (symmetric
eigendecomposition with small-eigenvalue truncation, so one-hot label
matrices that are rank-deficient after centering need no special casing)
and taking the SVD of the whitened cross-covariance. The summary score
is a weighted sum of the canonical correlations, with weights
proportional to the l1 mass of the data projected on each canonical
direction of the representation view; because the directions are kept in
variate scale, the weights and the score are invariant under invertible
affine transforms of the representations.

The fold protocol splits the rows into `folds` near-equal parts after a
seeded shuffle, fits on all-but-one fold and evaluates on the held-out
fold for the first `eval_folds` folds, and reports the mean.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)

DEFAULT_RIDGE_EPS = 1e-8
DEFAULT_RANK_TOL = 1e-10


@dataclass
class LabelMatrix:
    classes: list
    Y: np.ndarray  # n x n_classes one-hot

    @classmethod
    def from_labels(cls, labels, classes=None):
        if classes is None:
            classes = sorted(set(labels))
        index = {c: i for i, c in enumerate(classes)}
        Y = np.zeros((len(labels), len(classes)))
        for i, lab in enumerate(labels):
            Y[i, index[lab]] = 1.0
        return cls(classes=list(classes), Y=Y)


@dataclass
class CcaDirections:
    mean_x: np.ndarray
    mean_y: np.ndarray
    V: np.ndarray  # d1 x k, variate-scaled directions for X
    W: np.ndarray  # d2 x k
    train_correlations: np.ndarray  # rho_i, descending
    weights: np.ndarray  # alpha_i, >= 0, sum 1
    rank: int


@dataclass
class CcaResult:
    layer: int
    accent_filter: str
    fold_scores: list
    score: float
    per_fold_rho: list


def _inv_sqrt(S, rank_tol, ridge):
    """Symmetric inverse square root with eigenvalue truncation.

    Truncation is decided on the raw spectrum so a ridge-inflated zero
    eigenvalue (e.g. the centered one-hot null direction) cannot sneak
    back in as a spurious canonical pair.
    """
    evals, evecs = scipy.linalg.eigh(S)
    cutoff = rank_tol * evals[-1]
    keep = evals > cutoff
    inv = np.zeros_like(evals)
    inv[keep] = 1.0 / np.sqrt(evals[keep] + ridge)
    return (evecs * inv) @ evecs.T, int(keep.sum())


def fit_cca(X, Y, ridge_eps=DEFAULT_RIDGE_EPS, rank_tol=DEFAULT_RANK_TOL):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n, d1 = X.shape
    d2 = Y.shape[1]
    if n <= max(d1, d2):
        raise ValueError("need n > max(d1, d2), got n=%d d1=%d d2=%d"
                         % (n, d1, d2))
    mean_x = X.mean(axis=0)
    mean_y = Y.mean(axis=0)
    Xc = X - mean_x
    Yc = Y - mean_y
    Sxx = Xc.T @ Xc / (n - 1)
    Syy = Yc.T @ Yc / (n - 1)
    Sxy = Xc.T @ Yc / (n - 1)
    if np.trace(Sxx) <= 0 or np.trace(Syy) <= 0:
        raise ValueError("zero-variance view")
    isqrt_x, rank_x = _inv_sqrt(Sxx, rank_tol,
                                ridge_eps * np.trace(Sxx) / d1)
    isqrt_y, rank_y = _inv_sqrt(Syy, rank_tol,
                                ridge_eps * np.trace(Syy) / d2)
    T = isqrt_x @ Sxy @ isqrt_y
    U, S, Vt = scipy.linalg.svd(T, full_matrices=False)
    k = min(rank_x, rank_y, len(S))
    U, S, Vt = U[:, :k], S[:k], Vt[:k]
    # fix SVD sign ambiguity: largest-|.| component of each U column positive
    signs = np.sign(U[np.argmax(np.abs(U), axis=0), np.arange(k)])
    signs[signs == 0] = 1.0
    U *= signs
    Vt *= signs[:, None]

    rho = np.clip(S, 0.0, 1.0)
    V = isqrt_x @ U
    W = isqrt_y @ Vt.T
    # projection weights on the representation view, variate scale
    proj = np.abs(Xc @ V)  # n x k
    weights = proj.sum(axis=0)
    total = weights.sum()
    if total <= 0:
        weights = np.full(k, 1.0 / k)
    else:
        weights = weights / total
    return CcaDirections(mean_x=mean_x, mean_y=mean_y, V=V, W=W,
                         train_correlations=rho, weights=weights, rank=k)


def eval_cca(directions, X_test, Y_test):
    """Projection-weighted sum of test-fold canonical correlations."""
    X_test = np.asarray(X_test, dtype=np.float64)
    Y_test = np.asarray(Y_test, dtype=np.float64)
    if len(X_test) == 0:
        raise ValueError("empty test set")
    a = (X_test - directions.mean_x) @ directions.V
    b = (Y_test - directions.mean_y) @ directions.W
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    sa = np.sqrt((a * a).sum(axis=0))
    sb = np.sqrt((b * b).sum(axis=0))
    ok = (sa > 0) & (sb > 0)
    if not np.all(ok):
        log.warning("%d zero-variance test variates skipped",
                    int((~ok).sum()))
    if not np.any(ok):
        return 0.0
    rho_test = (a[:, ok] * b[:, ok]).sum(axis=0) / (sa[ok] * sb[ok])
    w = directions.weights[ok]
    return float((w / w.sum()) @ rho_test)


def fold_split(n, folds, seed):
    """Seeded shuffle of range(n) split into `folds` near-equal parts."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    perm = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def cca_protocol(table, folds=10, eval_folds=3, seed=0,
                 ridge_eps=DEFAULT_RIDGE_EPS, rank_tol=DEFAULT_RANK_TOL,
                 accent_filter=None):
    """Fold-based PWCCA score of one layer's segment table."""
    if accent_filter is not None and accent_filter != "all":
        table = table.filter_accent(accent_filter)
    n = len(table)
    classes = sorted(set(table.labels))
    d1, d2 = table.dim, len(classes)
    if n < folds * (d1 + d2):
        raise ValueError(
            "insufficient rows: %d < folds * (d1 + d2) = %d"
            % (n, folds * (d1 + d2)))
    labmat = LabelMatrix.from_labels(table.labels, classes)
    parts = fold_split(n, folds, seed)
    fold_scores = []
    per_fold_rho = []
    for f in range(eval_folds):
        test_idx = parts[f]
        train_idx = np.sort(np.concatenate(
            [parts[g] for g in range(folds) if g != f]))
        Y_train = labmat.Y[train_idx]
        present = Y_train.sum(axis=0) > 0
        if not np.all(present):
            missing = [c for c, p in zip(classes, present) if not p]
            log.warning("fold %d: classes %s absent from training split, "
                        "columns dropped", f, missing)
        dirs = fit_cca(table.X[train_idx], Y_train[:, present],
                       ridge_eps=ridge_eps, rank_tol=rank_tol)
        score = eval_cca(dirs, table.X[test_idx],
                         labmat.Y[test_idx][:, present])
        fold_scores.append(score)
        per_fold_rho.append(dirs.train_correlations)
    return CcaResult(layer=table.layer,
                     accent_filter=accent_filter or "all",
                     fold_scores=fold_scores,
                     score=float(np.mean(fold_scores)),
                     per_fold_rho=per_fold_rho)


def write_results_csv(results, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["layer", "accent", "fold", "score"])
        for r in results:
            for i, s in enumerate(r.fold_scores):
                w.writerow([r.layer, r.accent_filter, i, repr(float(s))])
            w.writerow([r.layer, r.accent_filter, "mean",
                        repr(float(r.score))])
