"""Linear probes for word-level prosody targets with speaker-grouped CV.

The probe is a single linear output unit fit with a squared-error
objective; since that objective has a unique optimum we solve it in
closed form (features z-scored with training statistics, bias
unpenalized) instead of iterating gradient descent.

Objective, for reference oracles:
    J(w, b) = 1/(2n) * sum_i (w . z_i + b - y_i)^2 + lambda/2 * ||w||^2
with z_i the standardized features.

Cross-validation folds group rows by speaker so no test speaker ever
contributes training data.
"""

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class RidgeModel:
    weights: np.ndarray
    bias: float
    lam: float
    feature_means: np.ndarray
    feature_stds: np.ndarray


@dataclass
class FoldAssignment:
    folds: int
    speaker_to_fold: dict

    def __post_init__(self):
        for spk, f in self.speaker_to_fold.items():
            if not (0 <= f < self.folds):
                raise ValueError("speaker %r assigned to fold %d outside "
                                 "[0, %d)" % (spk, f, self.folds))

    @classmethod
    def by_accent(cls, speakers_by_accent, folds=4):
        """One speaker per accent per fold, when counts permit.

        `speakers_by_accent` maps accent -> list of speakers; each list
        must have exactly `folds` entries.
        """
        mapping = {}
        for accent in sorted(speakers_by_accent):
            spks = sorted(speakers_by_accent[accent])
            if len(spks) != folds:
                raise ValueError(
                    "accent %r has %d speakers, need exactly %d for "
                    "one-per-fold assignment" % (accent, len(spks), folds))
            for f, spk in enumerate(spks):
                mapping[spk] = f
        return cls(folds=folds, speaker_to_fold=mapping)


@dataclass
class ProbeResult:
    layer: int
    target: str
    per_accent_mse: dict
    overall_mse: float
    per_fold_mse: list = field(default_factory=list)


def fit_ridge(X, y, lam=None):
    """Closed-form ridge fit on z-scored features; bias unpenalized.

    lam defaults to 1e-4 * trace(standardized covariance) / D, which is
    1e-4 for fully non-degenerate features.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, D = X.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    degenerate = sd == 0
    sd = np.where(degenerate, 1.0, sd)
    Z = (X - mu) / sd
    if lam is None:
        lam = 1e-4 * np.trace(Z.T @ Z / n) / D if D else 1e-4
    ybar = y.mean()
    A = Z.T @ Z / n + lam * np.eye(D)
    rhs = Z.T @ (y - ybar) / n
    try:
        w = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as e:
        raise ValueError("ridge system singular beyond repair") from e
    w[degenerate] = 0.0
    return RidgeModel(weights=w, bias=float(ybar), lam=float(lam),
                      feature_means=mu, feature_stds=sd)


def predict(model, X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != len(model.weights):
        raise ValueError("dimension mismatch: model D=%d, input D=%d"
                         % (len(model.weights), X.shape[1]))
    Z = (X - model.feature_means) / model.feature_stds
    return Z @ model.weights + model.bias


def mse(model, X, y):
    r = predict(model, X) - np.asarray(y, dtype=np.float64)
    return float(np.mean(r * r))


def grouped_cv(table, target, assignment, lam=None):
    """Speaker-grouped cross-validation of one layer / one target.

    Returns a ProbeResult with per-fold, per-accent and sample-weighted
    overall test MSE.
    """
    y = {"prominence": table.prominence, "boundary": table.boundary}[target]
    if y is None:
        raise ValueError("table has no %s targets" % target)
    for spk in set(table.speakers):
        if spk not in assignment.speaker_to_fold:
            raise ValueError("speaker %r not assigned to any fold" % spk)
    row_fold = np.array([assignment.speaker_to_fold[s]
                         for s in table.speakers])
    sq_err = np.empty(len(table))
    per_fold = []
    for f in range(assignment.folds):
        test = row_fold == f
        train = ~test
        if not np.any(test):
            per_fold.append(float("nan"))
            continue
        if not np.any(train):
            raise ValueError("fold %d has an empty training split" % f)
        assert not (set(np.array(table.speakers)[test])
                    & set(np.array(table.speakers)[train])), \
            "speaker leakage between train and test"
        model = fit_ridge(table.X[train], y[train], lam=lam)
        r = predict(model, table.X[test]) - y[test]
        sq_err[test] = r * r
        per_fold.append(float(np.mean(r * r)))
    per_accent = {}
    for accent in sorted(set(table.accents)):
        sel = np.array([a == accent for a in table.accents])
        per_accent[accent] = float(np.mean(sq_err[sel]))
    return ProbeResult(layer=table.layer, target=target,
                       per_accent_mse=per_accent,
                       overall_mse=float(np.mean(sq_err)),
                       per_fold_mse=per_fold)


def write_results_csv(results, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["layer", "target", "accent", "fold", "mse"])
        for r in results:
            for i, m in enumerate(r.per_fold_mse):
                w.writerow([r.layer, r.target, "all", i, repr(float(m))])
            for accent, m in sorted(r.per_accent_mse.items()):
                w.writerow([r.layer, r.target, accent, "all",
                            repr(float(m))])
            w.writerow([r.layer, r.target, "all", "mean",
                        repr(float(r.overall_mse))])
