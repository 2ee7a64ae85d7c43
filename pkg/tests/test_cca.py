import numpy as np
import pytest
from scipy.stats import ortho_group

from layerprobe import cca, pooling


def planted_bivariate(n, corr, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 2))
    L = np.linalg.cholesky([[1.0, corr], [corr, 1.0]])
    xy = z @ L.T
    return xy[:, :1], xy[:, 1:]


def class_encoded_X(n, n_classes, dim, noise, seed=0):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, n_classes, n)
    Y = np.eye(n_classes)[labels]
    X = Y @ rng.standard_normal((n_classes, dim)) \
        + noise * rng.standard_normal((n, dim))
    return X, Y, labels


class TestFitCca:
    def test_self_correlation(self):
        labels = np.repeat(np.arange(3), 100)
        Y = np.eye(3)[labels]
        d = cca.fit_cca(Y, Y)
        assert np.all(d.train_correlations > 0.999)
        assert cca.eval_cca(d, Y, Y) == pytest.approx(1.0, abs=1e-6)

    def test_planted_correlation(self):
        # analytic: canonical correlation of a bivariate Gaussian = |corr|
        X, Y = planted_bivariate(50_000, 0.8, seed=1)
        d = cca.fit_cca(X, Y)
        assert d.rank == 1
        assert d.train_correlations[0] == pytest.approx(0.8, abs=0.02)

    def test_null_below_permutation_quantile(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((5000, 64))
        Y = np.eye(39)[rng.integers(0, 39, 5000)]
        score = cca.eval_cca(cca.fit_cca(X, Y), X, Y)
        null = []
        for _ in range(200):
            Yp = Y[rng.permutation(len(Y))]
            null.append(cca.eval_cca(cca.fit_cca(X, Yp), X, Yp))
        assert score < np.quantile(null, 0.99)

    def test_too_few_rows(self):
        with pytest.raises(ValueError, match="n >"):
            cca.fit_cca(np.zeros((10, 16)), np.eye(10))

    def test_zero_variance_view(self):
        Y = np.eye(3)[np.repeat(np.arange(3), 10)]
        with pytest.raises(ValueError, match="zero-variance"):
            cca.fit_cca(np.zeros((30, 2)), Y)

    def test_bounds_and_monotone_rho(self):
        X, Y, _ = class_encoded_X(2000, 10, 32, 0.5, seed=3)
        d = cca.fit_cca(X, Y)
        assert np.all(d.train_correlations >= 0)
        assert np.all(d.train_correlations <= 1 + 1e-9)
        assert np.all(np.diff(d.train_correlations) <= 1e-12)
        assert d.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_variates_uncorrelated(self):
        X, Y, _ = class_encoded_X(3000, 8, 24, 0.5, seed=4)
        d = cca.fit_cca(X, Y)
        v = (X - d.mean_x) @ d.V
        G = np.corrcoef(v.T)
        assert np.abs(G - np.diag(np.diag(G))).max() < 1e-6


class TestEvalCca:
    def test_train_eval_equals_weighted_sum(self):
        X, Y, _ = class_encoded_X(1500, 6, 16, 0.3, seed=5)
        d = cca.fit_cca(X, Y)
        expect = float(d.weights @ d.train_correlations)
        assert cca.eval_cca(d, X, Y) == pytest.approx(expect, abs=1e-6)

    def test_same_distribution_close(self):
        X, Y = planted_bivariate(50_000, 0.8, seed=6)
        Xt, Yt = planted_bivariate(20_000, 0.8, seed=7)
        d = cca.fit_cca(X, Y)
        train = cca.eval_cca(d, X, Y)
        test = cca.eval_cca(d, Xt, Yt)
        assert abs(train - test) < 0.03

    def test_permuted_labels_collapse(self):
        X, Y, _ = class_encoded_X(3000, 8, 24, 0.3, seed=8)
        d = cca.fit_cca(X, Y)
        rng = np.random.default_rng(9)
        good = cca.eval_cca(d, X, Y)
        bad = cca.eval_cca(d, X, Y[rng.permutation(len(Y))])
        assert bad < 0.1 < good


class TestAffineInvariance:
    def test_rotation_scaling_translation(self):
        X, Y, _ = class_encoded_X(5000, 39, 64, 0.5, seed=1)
        d = cca.fit_cca(X, Y)
        s0 = cca.eval_cca(d, X, Y)
        rng = np.random.default_rng(10)
        A = ortho_group.rvs(64, random_state=2) \
            @ np.diag(rng.uniform(0.5, 2.0, 64)) \
            @ ortho_group.rvs(64, random_state=3)
        Xt = X @ A + rng.standard_normal(64)
        st = cca.eval_cca(cca.fit_cca(Xt, Y), Xt, Y)
        assert abs(s0 - st) <= 1e-6


def planted_table(n_per_class=60, n_classes=8, dim=16, noise=0.01, seed=0,
                  layer=0):
    rng = np.random.default_rng(seed)
    labels = [str(c) for c in rng.integers(0, n_classes,
                                           n_per_class * n_classes)]
    classes = sorted(set(labels))
    onehot = np.array([[1.0 if lab == c else 0.0 for c in classes]
                       for lab in labels])
    X = onehot @ rng.standard_normal((len(classes), dim)) \
        + noise * rng.standard_normal((len(labels), dim))
    n = len(labels)
    return pooling.SegmentTable(
        layer=layer, X=X, labels=labels,
        speakers=["s%d" % (i % 4) for i in range(n)],
        accents=["US" if i % 2 else "CN" for i in range(n)],
        utt_ids=["u%d" % i for i in range(n)])


class TestProtocol:
    def test_near_perfect_on_planted(self):
        table = planted_table()
        res = cca.cca_protocol(table, seed=1)
        assert res.score >= 0.99
        assert len(res.fold_scores) == 3

    def test_determinism(self):
        table = planted_table(seed=2)
        a = cca.cca_protocol(table, seed=5)
        b = cca.cca_protocol(table, seed=5)
        assert a.fold_scores == b.fold_scores
        c = cca.cca_protocol(table, seed=6)
        assert a.fold_scores != c.fold_scores

    def test_insufficient_rows(self):
        table = planted_table().take(list(range(10)))
        with pytest.raises(ValueError, match="insufficient"):
            cca.cca_protocol(table, folds=10)

    def test_accent_filter(self):
        table = planted_table(n_per_class=120)
        res = cca.cca_protocol(table, accent_filter="US", seed=0)
        assert res.accent_filter == "US"
        assert res.score >= 0.99

    def test_noise_degrades_monotonically(self):
        scores = []
        for noise in (0.05, 0.5, 5.0):
            table = planted_table(noise=noise, seed=3)
            scores.append(cca.cca_protocol(table, seed=0).score)
        assert scores[0] >= scores[1] - 1e-3
        assert scores[1] >= scores[2] - 1e-3
