"""The five classifiers used to compare embeddings.

Each class follows a minimal ``fit(X, y)`` / ``predict(X)`` protocol. Labels
may be any sortable values; internally they are mapped to indices in sorted
order, and "smallest class index" in tie-breaks refers to that order.
"""

from __future__ import annotations

import logging
import math
from itertools import combinations

import numpy as np
from numba import njit

log = logging.getLogger(__name__)

CLASSIFIERS = ("knn", "svm", "naive_bayes", "bagging", "lda")
COV_REGULARIZATION = 1e-8
VARIANCE_FLOOR = 1e-12


class _Base:
    def _encode(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        self.classes_, codes = np.unique(np.asarray(y), return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("training data must contain at least two classes")
        return X, codes.reshape(-1)

    @staticmethod
    def _as_matrix(X):
        X = np.asarray(X, dtype=np.float64)
        return X[:, None] if X.ndim == 1 else X

    def predict(self, X):
        return self.classes_[self._predict_codes(self._as_matrix(X))]


def _squared_distances(A, B):
    acc = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k][:, None] - B[:, k][None, :]
        acc += diff * diff
    return acc


class KNeighbors(_Base):
    """Majority vote of the ``k`` nearest training points (Euclidean).

    Equal vote counts go to the class whose tied neighbours are closer on
    average, then to the smallest class index.
    """

    def __init__(self, k: int = 10):
        self.k = k

    def fit(self, X, y):
        self.X_, self.y_ = self._encode(X, y)
        return self

    def _predict_codes(self, X):
        D = np.sqrt(_squared_distances(X, self.X_))
        k = min(self.k, self.X_.shape[0])
        order = np.argsort(D, axis=1, kind="stable")[:, :k]
        n_cls = self.classes_.size
        out = np.empty(X.shape[0], dtype=np.intp)
        for row, nbrs in enumerate(order):
            lab = self.y_[nbrs]
            votes = np.bincount(lab, minlength=n_cls)
            tied = np.flatnonzero(votes == votes.max())
            if tied.size == 1:
                out[row] = tied[0]
                continue
            dist = D[row, nbrs]
            means = [dist[lab == c].mean() for c in tied]
            out[row] = tied[int(np.argmin(means))]  # argmin keeps the first, i.e. smallest index
        return out


class BinarySVM:
    """Linear soft-margin SVM trained on the dual by pairwise (SMO) updates.

    Labels are +1/-1. Each step picks the maximal KKT-violating pair and moves
    it analytically; training stops once the violation gap is below ``tol``.
    """

    def __init__(self, C: float = 1.0, tol: float = 1e-6, max_iter: int = 100_000):
        self.C, self.tol, self.max_iter = C, tol, max_iter

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = X.shape[0]
        K = X @ X.T
        diag = np.diag(K).copy()
        alpha = np.zeros(n)
        grad = -np.ones(n)  # gradient of 0.5 a'Qa - sum(a), Q = yy'K
        C = self.C
        self.n_iter_ = 0
        for it in range(self.max_iter):
            score = -y * grad
            up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
            low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
            i = int(np.argmax(np.where(up, score, -np.inf)))
            j = int(np.argmin(np.where(low, score, np.inf)))
            gap = score[i] - score[j]
            if gap < self.tol:
                break
            eta = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
            step = gap / eta
            step = min(step, C - alpha[i] if y[i] > 0 else alpha[i])
            step = min(step, alpha[j] if y[j] > 0 else C - alpha[j])
            alpha[i] += y[i] * step
            alpha[j] -= y[j] * step
            grad += y * step * (K[:, i] - K[:, j])
            self.n_iter_ = it + 1
        else:
            log.warning("SVM dual did not reach tol %.1e in %d iterations", self.tol, self.max_iter)
        self.alpha_ = alpha
        self.w_ = (alpha * y) @ X
        score = -y * grad
        free = (alpha > 0) & (alpha < C)
        if np.any(free):
            self.b_ = float(np.mean(score[free]))
        else:
            up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
            low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
            m = score[up].max() if up.any() else score.max()
            M = score[low].min() if low.any() else score.min()
            self.b_ = float(0.5 * (m + M))
        self._y, self._grad = y, grad
        return self

    def kkt_violation(self) -> float:
        """Maximal pairwise violation ``max_up(-y g) - min_low(-y g)`` at the solution."""
        y, a, C = self._y, self.alpha_, self.C
        score = -y * self._grad
        up = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))
        low = ((y > 0) & (a > 0)) | ((y < 0) & (a < C))
        if not up.any() or not low.any():
            return 0.0
        return float(max(0.0, score[up].max() - score[low].min()))

    def decision_function(self, X):
        return np.asarray(X, dtype=np.float64) @ self.w_ + self.b_


class LinearSVM(_Base):
    """One-vs-one linear SVM; features are standardized on the training data."""

    def __init__(self, C: float = 1.0, tol: float = 1e-6, max_iter: int = 100_000, standardize: bool = True):
        self.C, self.tol, self.max_iter, self.standardize = C, tol, max_iter, standardize

    def _scale(self, X):
        return (X - self.mu_) / self.sd_

    def fit(self, X, y):
        X, codes = self._encode(X, y)
        if self.standardize:
            self.mu_ = X.mean(axis=0)
            sd = X.std(axis=0)
            self.sd_ = np.where(sd > 0, sd, 1.0)
        else:
            self.mu_, self.sd_ = np.zeros(X.shape[1]), np.ones(X.shape[1])
        Xs = self._scale(X)
        self.machines_ = {}
        for a, b in combinations(range(self.classes_.size), 2):
            sel = (codes == a) | (codes == b)
            target = np.where(codes[sel] == a, 1.0, -1.0)
            self.machines_[(a, b)] = BinarySVM(self.C, self.tol, self.max_iter).fit(Xs[sel], target)
        return self

    def _predict_codes(self, X):
        Xs = self._scale(X)
        votes = np.zeros((X.shape[0], self.classes_.size), dtype=np.intp)
        rows = np.arange(X.shape[0])
        for (a, b), m in self.machines_.items():
            win = np.where(m.decision_function(Xs) > 0, a, b)
            np.add.at(votes, (rows, win), 1)
        return np.argmax(votes, axis=1)


class GaussianNaiveBayes(_Base):
    """Per-class, per-feature normal densities with sample (N-1) variances."""

    def fit(self, X, y):
        X, codes = self._encode(X, y)
        n_cls = self.classes_.size
        counts = np.bincount(codes, minlength=n_cls)
        if np.any(counts < 2):
            raise ValueError("every class needs at least two training points")
        self.prior_ = counts / counts.sum()
        self.mean_ = np.vstack([X[codes == c].mean(axis=0) for c in range(n_cls)])
        var = np.vstack([X[codes == c].var(axis=0, ddof=1) for c in range(n_cls)])
        floor = np.maximum(VARIANCE_FLOOR * X.var(axis=0), np.finfo(float).tiny)
        self.var_ = np.maximum(var, floor)
        return self

    def joint_log_likelihood(self, X):
        X = self._as_matrix(X)
        out = np.empty((X.shape[0], self.classes_.size))
        for c in range(self.classes_.size):
            z = (X - self.mean_[c]) ** 2 / self.var_[c]
            out[:, c] = math.log(self.prior_[c]) - 0.5 * np.sum(np.log(2 * np.pi * self.var_[c]) + z, axis=1)
        return out

    def predict_proba(self, X):
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def _predict_codes(self, X):
        return np.argmax(self.joint_log_likelihood(X), axis=1)


class LinearDiscriminant(_Base):
    """Gaussian classes sharing one covariance matrix.

    ``covariance="pooled"`` (default) uses the within-class covariance;
    ``"total"`` uses the covariance of all training data ignoring labels.
    """

    def __init__(self, covariance: str = "pooled"):
        if covariance not in ("pooled", "total"):
            raise ValueError(f"unknown covariance mode {covariance!r}")
        self.covariance = covariance

    def fit(self, X, y):
        X, codes = self._encode(X, y)
        n, F = X.shape
        n_cls = self.classes_.size
        counts = np.bincount(codes, minlength=n_cls)
        if np.any(counts < 2):
            raise ValueError("every class needs at least two training points")
        self.prior_ = counts / n
        self.mean_ = np.vstack([X[codes == c].mean(axis=0) for c in range(n_cls)])
        if self.covariance == "pooled":
            resid = X - self.mean_[codes]
            cov = resid.T @ resid / (n - n_cls)
        else:
            cov = np.atleast_2d(np.cov(X, rowvar=False))
        tr = np.trace(cov)
        cov = cov + COV_REGULARIZATION * (tr / F if tr > 0 else 1.0) * np.eye(F)
        evals, evecs = np.linalg.eigh(cov)
        self.cov_ = cov
        self._whiten = evecs / np.sqrt(evals)
        self._logdet = float(np.sum(np.log(evals)))
        return self

    def log_density(self, X):
        """``log P(x | k)`` for every class, shape (n, n_classes)."""
        X = self._as_matrix(X)
        F = X.shape[1]
        Z = X @ self._whiten
        M = self.mean_ @ self._whiten
        maha = _squared_distances(Z, M)
        return -0.5 * (maha + self._logdet + F * math.log(2 * math.pi))

    def predict_proba(self, X, normalize: bool = True):
        """Posterior ``P(k | x)``; with ``normalize=False`` the evidence ``P(x)``
        is not divided out and ``P(k) P(x | k)`` is returned (row-rescaled by a
        positive per-row constant for numerical range)."""
        joint = self.log_density(X) + np.log(self.prior_)
        joint -= joint.max(axis=1, keepdims=True)
        p = np.exp(joint)
        return p / p.sum(axis=1, keepdims=True) if normalize else p

    def _predict_codes(self, X):
        # minimizing the summed posterior of the other classes == maximizing the own posterior
        post = self.predict_proba(X)
        expected_cost = post.sum(axis=1, keepdims=True) - post
        return np.argmin(expected_cost, axis=1)


class DecisionTree(_Base):
    """CART tree on Gini impurity with midpoint thresholds, grown until pure."""

    def fit(self, X, y, *, classes=None):
        if classes is None:
            X, codes = self._encode(X, y)
        else:
            self.classes_ = classes
            X, codes = self._as_matrix(X), np.asarray(y)
        self._grow(X, codes)
        return self

    def _grow(self, X, codes):
        arrays = _grow_tree(np.ascontiguousarray(X), codes.astype(np.int64), self.classes_.size)
        self.feature_, self.threshold_, self.left_, self.right_, self.value_ = arrays

    def _predict_codes(self, X):
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = self.feature_[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nd = node[rows]
            go_left = X[rows, self.feature_[nd]] <= self.threshold_[nd]
            node[rows] = np.where(go_left, self.left_[nd], self.right_[nd])
            active = self.feature_[node] >= 0
        return self.value_[node]


@njit(cache=True)
def _best_split(X, y, idx, lo, hi, n_cls):
    """Lowest weighted Gini split of rows ``idx[lo:hi]`` as ``(feature, threshold)``.

    Feature is -1 when no split separates any two distinct values.
    """
    m = hi - lo
    n_feat = X.shape[1]
    best_f, best_thr, best_score = -1, 0.0, np.inf
    left = np.empty(n_cls)
    total = np.zeros(n_cls)
    vals = np.empty(m)
    for r in range(m):
        total[y[idx[lo + r]]] += 1.0
    for f in range(n_feat):
        for r in range(m):
            vals[r] = X[idx[lo + r], f]
        order = np.argsort(vals, kind="mergesort")
        left[:] = 0.0
        sq_left = 0.0
        sq_right = 0.0
        for c in range(n_cls):
            sq_right += total[c] * total[c]
        for pos in range(m - 1):
            c = y[idx[lo + order[pos]]]
            # move one sample of class c from the right child to the left one
            sq_left += 2.0 * left[c] + 1.0
            sq_right -= 2.0 * (total[c] - left[c]) - 1.0
            left[c] += 1.0
            a = vals[order[pos]]
            b = vals[order[pos + 1]]
            if not a < b:
                continue
            nl = pos + 1.0
            nr = m - nl
            score = (nl - sq_left / nl + nr - sq_right / nr) / m
            if score < best_score - 1e-15:
                best_score = score
                best_f = f
                best_thr = 0.5 * (a + b)
    return best_f, best_thr


@njit(cache=True)
def _grow_tree(X, y, n_cls):
    n = X.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.int64)
    idx = np.arange(n)
    scratch = np.empty(n, dtype=np.int64)
    counts = np.zeros(n_cls, dtype=np.int64)
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    n_nodes = 1
    top = 0
    stack_node[0], stack_lo[0], stack_hi[0] = 0, 0, n
    top = 1
    while top > 0:
        top -= 1
        node, lo, hi = stack_node[top], stack_lo[top], stack_hi[top]
        counts[:] = 0
        for r in range(lo, hi):
            counts[y[idx[r]]] += 1
        best = 0
        for c in range(1, n_cls):
            if counts[c] > counts[best]:
                best = c
        value[node] = best
        if counts[best] == hi - lo:
            continue
        f, thr = _best_split(X, y, idx, lo, hi, n_cls)
        if f < 0:
            continue
        # stable partition: rows going left keep their order, then rows going right
        nl = 0
        for r in range(lo, hi):
            if X[idx[r], f] <= thr:
                scratch[nl] = idx[r]
                nl += 1
        k = nl
        for r in range(lo, hi):
            if not X[idx[r], f] <= thr:
                scratch[k] = idx[r]
                k += 1
        for r in range(hi - lo):
            idx[lo + r] = scratch[r]
        feature[node] = f
        threshold[node] = thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        stack_node[top], stack_lo[top], stack_hi[top] = right[node], lo + nl, hi
        top += 1
        stack_node[top], stack_lo[top], stack_hi[top] = left[node], lo, lo + nl
        top += 1
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes])


class BaggedTrees(_Base):
    """Majority vote of trees grown on bootstrap resamples of size N."""

    def __init__(self, n_trees: int = 100, bootstrap: bool = True, seed: int = 0):
        self.n_trees, self.bootstrap, self.seed = n_trees, bootstrap, seed

    def fit(self, X, y):
        X, codes = self._encode(X, y)
        rng = np.random.default_rng(self.seed)
        n = X.shape[0]
        self.trees_ = []
        for _ in range(self.n_trees):
            idx = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            self.trees_.append(DecisionTree().fit(X[idx], codes[idx], classes=self.classes_))
        return self

    def _predict_codes(self, X):
        votes = np.zeros((X.shape[0], self.classes_.size), dtype=np.intp)
        rows = np.arange(X.shape[0])
        for tree in self.trees_:
            np.add.at(votes, (rows, tree._predict_codes(X)), 1)
        return np.argmax(votes, axis=1)


def make_classifier(name: str, seed: int = 0, **params):
    if name == "knn":
        return KNeighbors(**params)
    if name == "svm":
        return LinearSVM(**params)
    if name == "naive_bayes":
        return GaussianNaiveBayes(**params)
    if name == "bagging":
        return BaggedTrees(seed=seed, **params)
    if name == "lda":
        return LinearDiscriminant(**params)
    raise ValueError(f"unknown classifier {name!r}; choose from {CLASSIFIERS}")


def _classify(name, X_train, y_train, X_test, **params):
    return make_classifier(name, **params).fit(X_train, y_train).predict(X_test)


def knn_classify(X_train, y_train, X_test, k: int = 10):
    return _classify("knn", X_train, y_train, X_test, k=k)


def svm_classify(X_train, y_train, X_test, **params):
    return _classify("svm", X_train, y_train, X_test, **params)


def naive_bayes_classify(X_train, y_train, X_test):
    return _classify("naive_bayes", X_train, y_train, X_test)


def bagging_classify(X_train, y_train, X_test, n_trees: int = 100, seed: int = 0):
    return _classify("bagging", X_train, y_train, X_test, n_trees=n_trees, seed=seed)


def lda_classify(X_train, y_train, X_test, covariance: str = "pooled"):
    return _classify("lda", X_train, y_train, X_test, covariance=covariance)
