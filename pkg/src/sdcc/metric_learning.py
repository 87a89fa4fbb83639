"""Linear metric learning: NCA, MLKR and LMNN.

All three learn a square matrix ``A`` and embed data as ``X @ A.T``.  Each
objective comes with an analytic gradient; the gradients share one shape::

    d objective / dA = 2 A X^T L(W) X,   L(W) = diag(W 1 + W^T 1) - W - W^T

where ``W[i, j]`` is the derivative of the objective with respect to the
squared embedded distance ``||A x_i - A x_j||^2``.

Fitting rescales the inputs by their median pairwise distance, runs
full-batch gradient descent with backtracking from the identity, and folds
the scale back into the returned matrix.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (ClassTooSmall, DimensionMismatch, InvalidArgument,
                     NonFiniteObjective, SingleClassNoGradient, TooFewSamples)
from .seeding import derive_seed

METHODS = ("NCA", "MLKR", "LMNN")

ARMIJO = 1e-4
MIN_STEP = 1e-14
# gradients below this Frobenius norm (on median-scaled data) count as zero
GRAD_TOL = 1e-10


@dataclass(frozen=True)
class OptimizerConfig:
    """Solver settings.

    ``initial_step`` is the Frobenius length of the first trial step;
    later steps double after every accepted step and halve on rejection.
    The solver stops after ``max_iterations`` accepted steps or once an
    accepted step improves the objective by less than
    ``objective_tolerance``.  Restart 0 starts at the identity; restart
    ``r > 0`` perturbs it with N(0, 0.01^2) noise seeded by
    ``derive_seed(seed, r)``.
    """

    max_iterations: int = 100
    initial_step: float = 0.1
    objective_tolerance: float = 1e-6
    restarts: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidArgument("max_iterations must be >= 1")
        if not self.initial_step > 0:
            raise InvalidArgument("initial_step must be > 0")
        if not self.objective_tolerance >= 0:
            raise InvalidArgument("objective_tolerance must be >= 0")
        if self.restarts < 1:
            raise InvalidArgument("restarts must be >= 1")


@dataclass(frozen=True, eq=False)
class LinearMap:
    matrix: np.ndarray
    method: str
    seed: int = 0
    final_objective: float = float("nan")
    iterations_run: int = 0
    objective_trace: tuple = field(default=(), repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgument(f"a LinearMap must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NonFiniteObjective("LinearMap entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d(self):
        return self.matrix.shape[0]

    def to_json(self):
        return json.dumps({
            "method": self.method,
            "seed": self.seed,
            "d": self.d,
            "matrix": [float(v) for v in self.matrix.ravel()],
            "final_objective": self.final_objective,
            "iterations_run": self.iterations_run,
            "objective_trace_length": len(self.objective_trace),
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        d = int(doc["d"])
        return cls(np.array(doc["matrix"], dtype=float).reshape(d, d), doc["method"],
                   int(doc["seed"]), float(doc["final_objective"]), int(doc["iterations_run"]))


def identity_map(d, method="IDENTITY"):
    return LinearMap(np.eye(d), method)


def transform(lmap, X):
    """Embed rows of ``X`` as ``X @ A.T``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != lmap.d:
        raise DimensionMismatch(f"X has shape {X.shape}, map expects {lmap.d} columns")
    return X @ lmap.matrix.T


# -- objectives --------------------------------------------------------------

# Objectives are evaluated in row blocks so the n x n intermediates stay in
# cache; at a few thousand rows this is several times faster than building
# the full matrices.

BLOCK_ROWS = 64


def _sq_dists(E):
    sq = np.einsum("ij,ij->i", E, E)
    D = E @ E.T
    D *= -2.0
    D += sq[:, None]
    D += sq[None, :]
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def _block_dists(E, sq, lo, hi):
    """Rows ``lo:hi`` of the squared distance matrix, diagonal entries zeroed."""
    D = E[lo:hi] @ E.T
    D *= -2.0
    D += sq[lo:hi, None]
    D += sq[None, :]
    np.maximum(D, 0.0, out=D)
    r = np.arange(hi - lo)
    D[r, r + lo] = 0.0
    return D


def _softmax_rows(D, lo=0):
    """In-place row softmax of -D, excluding column ``lo + row`` (the diagonal)."""
    r = np.arange(D.shape[0])
    D[r, r + lo] = np.inf
    D -= D.min(axis=1, keepdims=True)
    np.negative(D, out=D)
    np.exp(D, out=D)
    D /= D.sum(axis=1, keepdims=True)
    return D


class _Laplacian:
    """Accumulates X^T L(W) X = sum_ij W_ij (x_i - x_j)(x_i - x_j)^T block by block."""

    def __init__(self, X):
        self.X = X
        self.s = np.zeros(X.shape[0])
        self.M = np.zeros((X.shape[1], X.shape[1]))

    def add(self, lo, hi, W):
        self.s[lo:hi] += W.sum(axis=1)
        self.s += W.sum(axis=0)
        self.M += self.X[lo:hi].T @ (W @ self.X)

    def value(self):
        X = self.X
        return (X * self.s[:, None]).T @ X - self.M - self.M.T


def _blocks(n):
    for lo in range(0, n, BLOCK_ROWS):
        yield lo, min(lo + BLOCK_ROWS, n)


def nca_objective(A, X, y):
    """NCA objective ``sum_i sum_{j in class(i), j != i} p_ij`` and its gradient."""
    y = np.asarray(y)
    E = X @ A.T
    sq = np.einsum("ij,ij->i", E, E)
    acc = _Laplacian(X)
    total = 0.0
    for lo, hi in _blocks(X.shape[0]):
        P = _softmax_rows(_block_dists(E, sq, lo, hi), lo)
        masked = P * (y[lo:hi, None] == y[None, :])
        p = masked.sum(axis=1)       # P is zero on the diagonal, so no self term
        P *= p[:, None]
        P -= masked
        total += float(p.sum())
        acc.add(lo, hi, P)
    return total, 2.0 * A @ acc.value()


def mlkr_objective(A, X, y):
    """Leave-one-out kernel regression loss ``sum_i (yhat_i - y_i)^2`` and its gradient."""
    y = np.asarray(y, dtype=float)
    E = X @ A.T
    sq = np.einsum("ij,ij->i", E, E)
    acc = _Laplacian(X)
    loss = 0.0
    for lo, hi in _blocks(X.shape[0]):
        P = _softmax_rows(_block_dists(E, sq, lo, hi), lo)
        yhat = P @ y
        r = yhat - y[lo:hi]
        P *= y[None, :] - yhat[:, None]
        P *= r[:, None]
        loss += float(r @ r)
        acc.add(lo, hi, P)
    return loss, -4.0 * A @ acc.value()


def lmnn_targets(X, y, k=3, clamp=True):
    """Indices of the ``k`` nearest same-class neighbours of each row.

    Returns ``(rows, targets)`` index arrays, one entry per (i, j) pair.
    Classes with ``<= k`` members use ``size - 1`` targets when ``clamp``.
    Distance ties go to the lower index.
    """
    y = np.asarray(y)
    D = _sq_dists(np.asarray(X, dtype=float))
    rows, targets = [], []
    for c in sorted(set(y.tolist())):
        members = np.flatnonzero(y == c)
        kc = min(k, members.size - 1)
        if kc < k and not clamp:
            raise ClassTooSmall(f"class {c!r} has {members.size} members, need {k + 1}")
        if kc <= 0:
            continue
        sub = D[np.ix_(members, members)]
        np.fill_diagonal(sub, np.inf)
        order = np.argsort(sub, axis=1, kind="stable")[:, :kc]
        rows.append(np.repeat(members, kc))
        targets.append(members[order].ravel())
    if not rows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(rows), np.concatenate(targets)


def lmnn_objective(A, X, y, targets, mu=0.5):
    """LMNN loss ``(1 - mu) * pull + mu * push`` and its (sub)gradient.

    ``targets`` is the ``(rows, targets)`` pair from :func:`lmnn_targets`.
    """
    y = np.asarray(y)
    ti, tj = targets
    n = X.shape[0]
    E = X @ A.T
    sq = np.einsum("ij,ij->i", E, E)
    # target pairs sorted by row; rank r holds each row's r-th target
    order = np.argsort(ti, kind="stable")
    ti, tj = ti[order], tj[order]
    rank = np.arange(ti.size) - np.searchsorted(ti, ti, side="left")
    d_target = np.maximum(sq[ti] + sq[tj] - 2.0 * np.einsum("ij,ij->i", E[ti], E[tj]), 0.0)
    pair_w = np.full(ti.size, 1.0 - mu)
    groups = [np.flatnonzero(rank == r) for r in range(int(rank.max()) + 1)] if ti.size else []
    acc = _Laplacian(X)
    push = 0.0
    for lo, hi in _blocks(n):
        D = None
        for g in groups:
            a, b = np.searchsorted(ti[g], (lo, hi))
            if a == b:
                continue
            if D is None:
                D = _block_dists(E, sq, lo, hi)
                other = y[lo:hi, None] != y[None, :]
                count = np.zeros(D.shape, dtype=np.uint8 if len(groups) < 256 else np.int64)
            sel = g[a:b]
            i = ti[sel] - lo
            full = i.size == hi - lo     # then i == arange(hi - lo)
            margin = np.subtract((1.0 + d_target[sel])[:, None], D if full else D[i])
            active = margin > 0.0
            active &= other if full else other[i]
            margin *= active
            push += float(margin.sum())
            pair_w[sel] += mu * np.count_nonzero(active, axis=1)
            if full:
                count += active
            else:
                count[i] += active
        if D is not None:
            acc.add(lo, hi, count * -mu)
    V = X[ti] - X[tj]
    value = (1.0 - mu) * float(d_target.sum()) + mu * push
    return value, 2.0 * A @ (acc.value() + V.T @ (pair_w[:, None] * V))


# -- solver ------------------------------------------------------------------

def _median_distance(X):
    D = np.sqrt(_sq_dists(X))
    upper = D[np.triu_indices(X.shape[0], k=1)]
    upper = upper[upper > 0]
    return float(np.median(upper)) if upper.size else 1.0


def _descend(fun, A0, cfg):
    """Gradient descent with Armijo backtracking; returns (A, f, trace, accepted)."""
    A = A0
    f, G = fun(A)
    if not np.isfinite(f) or not np.all(np.isfinite(G)):
        raise NonFiniteObjective(f"objective is not finite at the starting point ({f})")
    trace = [f]
    gnorm = float(np.linalg.norm(G))
    step = cfg.initial_step / gnorm if gnorm > GRAD_TOL else 0.0
    accepted = 0
    while accepted < cfg.max_iterations:
        gn2 = float(np.sum(G * G))
        if np.sqrt(gn2) <= GRAD_TOL:
            break
        while step * np.sqrt(gn2) > MIN_STEP:
            A_new = A - step * G
            f_new, G_new = fun(A_new)
            if np.isfinite(f_new) and np.all(np.isfinite(G_new)) \
                    and f_new <= f - ARMIJO * step * gn2:
                break
            step *= 0.5
        else:
            break
        improvement = f - f_new
        A, f, G = A_new, f_new, G_new
        trace.append(f)
        accepted += 1
        step *= 2.0
        if improvement < cfg.objective_tolerance:
            break
    return A, f, trace, accepted


def _fit(method, fun_scaled, d, scale, cfg, seed, sign):
    best = None
    for r in range(cfg.restarts):
        A0 = np.eye(d)
        if r > 0:
            A0 = A0 + 0.01 * np.random.default_rng(derive_seed(seed, r)).standard_normal((d, d))
        A, f, trace, accepted = _descend(fun_scaled, A0, cfg)
        if best is None or f < best[1]:
            best = (A, f, trace, accepted)
    A, f, trace, accepted = best
    if accepted == 0 and cfg.restarts == 1:
        matrix = np.eye(d)
    else:
        matrix = A / scale
    return LinearMap(matrix, method, int(seed), sign * float(f), accepted,
                     tuple(sign * v for v in trace))


def _prepare(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidArgument("X must be a 2-D array")
    if X.shape[0] < 2:
        raise TooFewSamples("metric learning needs at least 2 rows")
    if len(y) != X.shape[0]:
        raise DimensionMismatch(f"{len(y)} labels for {X.shape[0]} rows")
    if not np.all(np.isfinite(X)):
        raise NonFiniteObjective("X contains non-finite values")
    scale = _median_distance(X)
    return X, X / scale, scale


def fit_nca(X, y, cfg=None, seed=0):
    """Maximize the NCA objective from the identity (on median-scaled data)."""
    cfg = cfg or OptimizerConfig()
    y = np.asarray(y)
    X, Xs, scale = _prepare(X, y)
    d = X.shape[1]
    if len(set(y.tolist())) < 2:
        warnings.warn("single class: NCA objective is constant, returning identity",
                      SingleClassNoGradient, stacklevel=2)
        return LinearMap(np.eye(d), "NCA", int(seed), float(X.shape[0]), 0, (float(X.shape[0]),))

    codes = np.unique(y, return_inverse=True)[1].ravel()

    def fun(A):
        f, g = nca_objective(A, Xs, codes)
        return -f, -g

    return _fit("NCA", fun, d, scale, cfg, seed, sign=-1.0)


def fit_mlkr(X, y_numeric, cfg=None, seed=0):
    """Minimize leave-one-out kernel regression error from the identity."""
    cfg = cfg or OptimizerConfig()
    y = np.asarray(y_numeric, dtype=float)
    X, Xs, scale = _prepare(X, y)
    return _fit("MLKR", lambda A: mlkr_objective(A, Xs, y), X.shape[1], scale, cfg, seed, 1.0)


def fit_lmnn(X, y, k_neighbors=3, mu=0.5, cfg=None, seed=0, clamp=True):
    """Minimize the LMNN loss; target neighbours are fixed in the input space."""
    cfg = cfg or OptimizerConfig()
    y = np.asarray(y)
    X, Xs, scale = _prepare(X, y)
    codes = np.unique(y, return_inverse=True)[1].ravel()
    targets = lmnn_targets(Xs, y, k_neighbors, clamp)
    return _fit("LMNN", lambda A: lmnn_objective(A, Xs, codes, targets, mu), X.shape[1], scale,
                cfg, seed, 1.0)


def fit_method(method, X, labels, cfg=None, seed=0):
    """Fit ``method`` on class labels; MLKR regresses on sorted-label codes."""
    labels = np.asarray(labels)
    if method == "NCA":
        return fit_nca(X, labels, cfg, seed)
    if method == "MLKR":
        classes = sorted(set(labels.tolist()))
        codes = np.array([classes.index(v) for v in labels.tolist()], dtype=float)
        return fit_mlkr(X, codes, cfg, seed)
    if method == "LMNN":
        return fit_lmnn(X, labels, cfg=cfg, seed=seed)
    raise InvalidArgument(f"unknown metric learning method {method!r}")
