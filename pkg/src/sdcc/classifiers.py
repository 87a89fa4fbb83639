"""Decision tree, k-nearest-neighbour and RBF support vector classifiers.

Every tie is broken towards the lexicographically smallest label, and every
model is immutable once trained, so predictions are deterministic.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, EmptyTrainingSet, InvalidArgument,
                     LengthMismatch, SingleClassSVM)

CLASSIFIERS = ("DT", "SVM", "KNN")


def _check_fit_inputs(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=object)
    if X.ndim != 2:
        raise InvalidArgument("X must be 2-D")
    if X.shape[0] == 0:
        raise EmptyTrainingSet("cannot train on zero rows")
    if y.shape != (X.shape[0],):
        raise LengthMismatch(f"{y.size} labels for {X.shape[0]} rows")
    return X, y


def _check_predict_inputs(X, d):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != d:
        raise DimensionMismatch(f"expected {d} columns, got shape {X.shape}")
    return X


def _majority(counts, classes):
    # argmax picks the first maximum; classes are sorted, so ties -> smallest label
    return classes[int(np.argmax(counts))]


# -- decision tree -----------------------------------------------------------

@dataclass(frozen=True)
class Node:
    prediction: str
    feature: int = -1
    threshold: float = 0.0
    left: "Node" = None
    right: "Node" = None

    @property
    def is_leaf(self):
        return self.left is None


def gini(counts):
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def best_split(X, yc, n_classes):
    """Best (feature, threshold) by weighted Gini impurity, or None.

    Thresholds are midpoints between consecutive distinct sorted values; a
    row goes left when ``x <= threshold``.  Ties keep the first candidate in
    (feature, threshold) order.
    """
    n, d = X.shape
    best = None
    best_score = np.inf
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), yc[order]] = 1.0
        left = np.cumsum(onehot, axis=0)[:-1]
        right = left[-1] + onehot[-1] - left if n > 1 else left
        cut = np.flatnonzero(xs[1:] > xs[:-1])
        if cut.size == 0:
            continue
        lc, rc = left[cut], right[cut]
        nl = lc.sum(axis=1)
        nr = rc.sum(axis=1)
        gl = 1.0 - np.sum((lc / nl[:, None]) ** 2, axis=1)
        gr = 1.0 - np.sum((rc / nr[:, None]) ** 2, axis=1)
        score = (nl * gl + nr * gr) / n
        k = int(np.argmin(score))
        if score[k] < best_score - 1e-12:
            best_score = score[k]
            lo, hi = xs[cut[k]], xs[cut[k] + 1]
            thr = (lo + hi) / 2.0
            if thr >= hi:
                thr = lo
            best = (f, float(thr))
    return best


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    classes: tuple
    d: int
    max_depth: int

    def predict(self, X):
        X = _check_predict_inputs(X, self.d)
        out = []
        for row in X:
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out.append(node.prediction)
        return np.array(out, dtype=object)

    def leaves(self):
        stack, found = [self.root], []
        while stack:
            node = stack.pop()
            if node.is_leaf:
                found.append(node)
            else:
                stack.extend([node.right, node.left])
        return found

    def depth(self):
        def _depth(node):
            return 0 if node.is_leaf else 1 + max(_depth(node.left), _depth(node.right))
        return _depth(self.root)


def train_tree(X, y, max_depth=2):
    """Greedy CART with Gini impurity."""
    X, y = _check_fit_inputs(X, y)
    classes = tuple(sorted(set(y.tolist())))
    yc = np.array([classes.index(v) for v in y], dtype=np.int64)
    k = len(classes)

    def grow(idx, depth):
        counts = np.bincount(yc[idx], minlength=k)
        pred = _majority(counts, classes)
        if depth >= max_depth or idx.size < 2 or np.count_nonzero(counts) == 1:
            return Node(pred)
        split = best_split(X[idx], yc[idx], k)
        if split is None:
            return Node(pred)
        f, thr = split
        go_left = X[idx, f] <= thr
        return Node(pred, f, thr, grow(idx[go_left], depth + 1), grow(idx[~go_left], depth + 1))

    return DecisionTree(grow(np.arange(X.shape[0]), 0), classes, X.shape[1], max_depth)


# -- k nearest neighbours ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KNN:
    X: np.ndarray
    y: np.ndarray
    classes: tuple
    k: int

    @property
    def d(self):
        return self.X.shape[1]

    def predict(self, X, exclude_self=False):
        X = _check_predict_inputs(X, self.d)
        yc = np.array([self.classes.index(v) for v in self.y], dtype=np.int64)
        k = min(self.k, self.X.shape[0] - (1 if exclude_self else 0))
        sq_train = np.einsum("ij,ij->i", self.X, self.X)
        out = []
        for start in range(0, X.shape[0], 512):
            B = X[start:start + 512]
            D = np.einsum("ij,ij->i", B, B)[:, None] + sq_train[None, :] - 2.0 * B @ self.X.T
            if exclude_self:
                D[np.arange(B.shape[0]), np.arange(start, start + B.shape[0])] = np.inf
            nn = np.argsort(D, axis=1, kind="stable")[:, :k]
            for row in nn:
                out.append(_majority(np.bincount(yc[row], minlength=len(self.classes)),
                                     self.classes))
        return np.array(out, dtype=object)


def train_knn(X, y, k=5):
    X, y = _check_fit_inputs(X, y)
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    X = X.copy()
    X.setflags(write=False)
    return KNN(X, y.copy(), tuple(sorted(set(y.tolist()))), int(k))


# -- support vector machine ------------------------------------------------------

def rbf_kernel(U, V, gamma):
    su = np.einsum("ij,ij->i", U, U)
    sv = np.einsum("ij,ij->i", V, V)
    D = su[:, None] + sv[None, :] - 2.0 * U @ V.T
    np.maximum(D, 0.0, out=D)
    return np.exp(-gamma * D)


def smo(K, y, C=1.0, tol=1e-3, max_iter=1_000_000):
    """Solve the soft-margin SVM dual for labels ``y`` in {-1, +1}.

    Working pairs are picked with the second-order rule of Fan, Chen and
    Lin; iteration stops once the maximal KKT violation drops below ``tol``.
    Returns ``(alpha, b)`` for the decision function
    ``sum_i alpha_i y_i K(x_i, x) + b``.
    """
    n = y.size
    y = y.astype(float)
    alpha = np.zeros(n)
    G = -np.ones(n)          # gradient of 0.5 a^T Q a - e^T a with Q = yy^T * K
    diag = np.diag(K).copy()
    tau = 1e-12
    for _ in range(max_iter):
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        score = -y * G
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        m_val = score[i]
        M_val = score[low].min()
        if m_val - M_val < tol:
            break
        cand = low & (score < m_val)
        b = m_val - score[cand]
        a = diag[i] + diag[cand] - 2.0 * K[i, cand]
        a = np.where(a > 0, a, tau)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])
        # two-variable subproblem, following libsvm's update
        Ki, Kj = K[i], K[j]
        quad = max(diag[i] + diag[j] - 2.0 * K[i, j], tau)
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0 and aj < 0:
                aj, ai = 0.0, diff
            elif diff <= 0 and ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0 and ai > C:
                ai, aj = C, C - diff
            elif diff <= 0 and aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C and ai > C:
                ai, aj = C, total - C
            elif total <= C and aj < 0:
                aj, ai = 0.0, total
            if total > C and aj > C:
                aj, ai = C, total - C
            elif total <= C and ai < 0:
                ai, aj = 0.0, total
        dai, daj = ai - ai_old, aj - aj_old
        alpha[i], alpha[j] = ai, aj
        G += y * (y[i] * dai * Ki + y[j] * daj * Kj)
    # bias: average over free vectors, else midpoint of the feasible interval
    score = -y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = -float(np.mean(score[free]))
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = score[up].max() if up.any() else 0.0
        lo = score[low].min() if low.any() else 0.0
        rho = -(hi + lo) / 2.0
    return alpha, -rho


@dataclass(frozen=True, eq=False)
class SVM:
    X: np.ndarray
    classes: tuple
    gamma: float
    coefs: np.ndarray        # (n_machines, N): alpha_i * y_i
    biases: np.ndarray

    @property
    def d(self):
        return self.X.shape[1]

    def decision_function(self, X):
        X = _check_predict_inputs(X, self.d)
        K = rbf_kernel(X, self.X, self.gamma)
        return K @ self.coefs.T + self.biases[None, :]

    def predict(self, X):
        F = self.decision_function(X)
        if len(self.classes) == 2:
            # single machine: positive side is the second (larger) label
            return np.array([self.classes[1] if f > 0 else self.classes[0] for f in F[:, 0]],
                            dtype=object)
        return np.array([self.classes[int(np.argmax(row))] for row in F], dtype=object)


def train_svm(X, y, C=1.0, gamma=None, tol=1e-3):
    """RBF SVM; one-vs-rest machines for more than two classes.

    ``gamma`` defaults to ``1 / (d * Var(X))`` with the variance taken over
    every entry of ``X``.
    """
    X, y = _check_fit_inputs(X, y)
    classes = tuple(sorted(set(y.tolist())))
    if len(classes) < 2:
        raise SingleClassSVM("an SVM needs at least two classes")
    if gamma is None:
        var = float(X.var())
        gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    K = rbf_kernel(X, X, gamma)
    positives = classes[1:] if len(classes) == 2 else classes
    coefs, biases = [], []
    for c in positives:
        yy = np.where(y == c, 1.0, -1.0)
        alpha, b = smo(K, yy, C, tol)
        coefs.append(alpha * yy)
        biases.append(b)
    Xc = X.copy()
    Xc.setflags(write=False)
    return SVM(Xc, classes, float(gamma), np.array(coefs), np.array(biases))


# -- common entry points ----------------------------------------------------------

def train(kind, X, y, **params):
    """Train a ``DT``, ``KNN`` or ``SVM`` model."""
    if kind == "DT":
        return train_tree(X, y, params.get("max_depth", 2))
    if kind == "KNN":
        return train_knn(X, y, params.get("k", 5))
    if kind == "SVM":
        return train_svm(X, y, params.get("C", 1.0), params.get("gamma"),
                         params.get("tol", 1e-3))
    raise InvalidArgument(f"unknown classifier {kind!r}")


def predict(model, X):
    return model.predict(X)


def partition_by_correctness(model, X_test, y_test):
    """Split test row indices into (correct, incorrect)."""
    y_test = np.asarray(y_test, dtype=object)
    X_test = np.asarray(X_test, dtype=float)
    if X_test.ndim != 2 or X_test.shape[0] != y_test.size:
        raise LengthMismatch(f"{y_test.size} labels for {X_test.shape[0]} rows")
    if y_test.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    hit = model.predict(X_test) == y_test
    return np.flatnonzero(hit), np.flatnonzero(~hit)
