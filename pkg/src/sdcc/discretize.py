"""Per-feature 1-D k-means binning.

Each continuous feature is clustered on its own; a value's bin is the index
of its nearest center (ties go to the lower index), so bins are ordered like
the values.  Discrete features pass through unchanged.
"""

import json
from dataclasses import dataclass

import numpy as np

from .dataset import CONTINUOUS, DISCRETE
from .errors import InvalidArgument, SchemaMismatch
from .seeding import derive_seed

DEFAULT_RESTARTS = 10
MAX_ITER = 300
CENTER_TOL = 1e-6


def _nearest(values, centers):
    # argmin returns the first minimum, i.e. the lower center on ties
    return np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)


def _objective(points, weights, centers):
    labels = _nearest(points, centers)
    return float(np.sum(weights * (points - centers[labels]) ** 2))


def _kmeans_pp(points, weights, k, rng):
    centers = [points[rng.choice(points.size, p=weights / weights.sum())]]
    d2 = (points - centers[0]) ** 2
    for _ in range(1, k):
        p = weights * d2
        total = p.sum()
        if total <= 0:
            break
        c = points[rng.choice(points.size, p=p / total)]
        centers.append(c)
        d2 = np.minimum(d2, (points - c) ** 2)
    return np.sort(np.array(centers))


def lloyd_1d(points, weights, centers, max_iter=MAX_ITER, tol=CENTER_TOL):
    """Weighted Lloyd iterations from ``centers``.

    Returns ``(centers, objective_trace)``; the trace holds the within-cluster
    sum of squares before the first update and after every update.  Centers
    whose cluster empties are dropped at the end.
    """
    centers = np.sort(np.asarray(centers, dtype=float))
    trace = [_objective(points, weights, centers)]
    for _ in range(max_iter):
        labels = _nearest(points, centers)
        mass = np.bincount(labels, weights=weights, minlength=centers.size)
        sums = np.bincount(labels, weights=weights * points, minlength=centers.size)
        new = centers.copy()
        filled = mass > 0
        new[filled] = sums[filled] / mass[filled]
        new = np.sort(new)
        move = float(np.max(np.abs(new - centers)))
        centers = new
        trace.append(_objective(points, weights, centers))
        if move < tol:
            break
    labels = _nearest(points, centers)
    used = np.unique(labels)
    return np.unique(centers[used]), trace


def optimal_centers_1d(points, weights, k, block=1024):
    """Globally optimal 1-D k-means centers by dynamic programming.

    ``points`` must be sorted and distinct.  Clusters of an optimal 1-D
    clustering are contiguous runs, so the optimum over ``k`` runs is found
    with the usual ``O(k n^2)`` recursion over prefix sums.
    """
    n = points.size
    cw = np.concatenate([[0.0], np.cumsum(weights)])
    cs = np.concatenate([[0.0], np.cumsum(weights * points)])
    cq = np.concatenate([[0.0], np.cumsum(weights * points * points)])

    def cost(lo, hi):
        # SSE of points[lo:hi] (broadcasting); lo < hi
        w = cw[hi] - cw[lo]
        s = cs[hi] - cs[lo]
        return np.maximum(cq[hi] - cq[lo] - s * s / w, 0.0)

    ends = np.arange(1, n + 1)
    best = cost(0, ends)                  # best[i-1]: one cluster over points[:i]
    cuts = [np.zeros(n, dtype=np.int64)]
    for m in range(2, k + 1):
        new = np.full(n, np.inf)
        arg = np.zeros(n, dtype=np.int64)
        starts = np.arange(1, n)          # last cluster is points[start:end]
        for b0 in range(0, n, block):
            end = ends[b0:b0 + block]
            lo = starts[None, :]
            valid = lo < end[:, None]
            total = np.where(valid, best[lo - 1] + cost(lo, np.maximum(end[:, None], lo + 1)),
                             np.inf)
            j = np.argmin(total, axis=1)
            new[b0:b0 + block] = total[np.arange(end.size), j]
            arg[b0:b0 + block] = starts[j]
        best = new
        cuts.append(arg)
    bounds = [n]
    for m in range(k - 1, 0, -1):
        bounds.append(int(cuts[m][bounds[-1] - 1]))
    bounds.append(0)
    bounds = bounds[::-1]
    return np.array([(cs[b] - cs[a]) / (cw[b] - cw[a]) for a, b in zip(bounds, bounds[1:])])


def fit_kmeans_1d(values, k, seed=0, restarts=DEFAULT_RESTARTS):
    """Sorted centers of a 1-D k-means fit.

    ``k`` is clamped to the number of distinct values.  Lloyd's algorithm is
    run from ``restarts`` k-means++ initializations (restart ``r`` seeded
    with ``derive_seed(seed, r)``) and from the exact dynamic-programming
    optimum; the lowest within-cluster sum of squares wins, with earlier
    k-means++ restarts preferred on ties.  The last candidate makes the
    result globally optimal, which plain restarts do not guarantee.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise InvalidArgument("cannot cluster an empty list of values")
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    if not np.all(np.isfinite(values)):
        raise InvalidArgument("values must be finite")
    points, counts = np.unique(values, return_counts=True)
    weights = counts.astype(float)
    k_eff = min(int(k), points.size)
    if k_eff == points.size:
        return tuple(float(p) for p in points)
    best = None
    best_obj = np.inf
    for r in range(max(1, restarts)):
        rng = np.random.default_rng(derive_seed(seed, r))
        init = _kmeans_pp(points, weights, k_eff, rng)
        centers, _ = lloyd_1d(points, weights, init)
        obj = _objective(points, weights, centers)
        if obj < best_obj:
            best, best_obj = centers, obj
    centers, _ = lloyd_1d(points, weights, optimal_centers_1d(points, weights, k_eff))
    obj = _objective(points, weights, centers)
    if obj < best_obj - 1e-12 * max(1.0, abs(best_obj)):
        best = centers
    return tuple(float(c) for c in best)


@dataclass(frozen=True, eq=False)
class DiscretizedDataset:
    factor_names: tuple
    rows: np.ndarray
    alphabets: tuple
    labels: tuple

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != len(self.factor_names):
            raise InvalidArgument(f"rows must be N x {len(self.factor_names)}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self):
        return self.rows.shape[0]

    @property
    def d(self):
        return len(self.factor_names)

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        rows = self.rows[idx]
        return DiscretizedDataset(self.factor_names, rows, _alphabets(rows),
                                  tuple(self.labels[i] for i in idx))


def _alphabets(rows):
    return tuple(tuple(int(v) for v in np.unique(rows[:, j])) for j in range(rows.shape[1]))


@dataclass(frozen=True)
class Discretizer:
    feature_names: tuple
    feature_kinds: tuple
    centers: tuple        # per feature: sorted tuple of centers, or None when passed through
    k_requested: int
    seed: int

    @property
    def pass_through(self):
        return tuple(c is None for c in self.centers)

    def to_json(self):
        doc = {
            "k_requested": self.k_requested,
            "seed": self.seed,
            "features": [
                {"name": n, "kind": k, "pass_through": c is None,
                 "centers": None if c is None else list(c)}
                for n, k, c in zip(self.feature_names, self.feature_kinds, self.centers)
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        feats = doc["features"]
        centers = tuple(None if f["pass_through"] else tuple(float(c) for c in f["centers"])
                        for f in feats)
        for c in centers:
            if c is not None and (not c or any(b <= a for a, b in zip(c, c[1:]))):
                raise InvalidArgument("discretizer centers must be nonempty and increasing")
        return cls(tuple(f["name"] for f in feats), tuple(f["kind"] for f in feats),
                   centers, int(doc["k_requested"]), int(doc["seed"]))


def fit(ds, k=5, seed=0, restarts=DEFAULT_RESTARTS):
    """Fit one 1-D k-means per continuous feature of ``ds`` (all rows).

    Feature ``j`` uses seed ``derive_seed(seed, j)``.
    """
    if len(ds) == 0:
        raise InvalidArgument("cannot fit a discretizer on an empty dataset")
    centers = []
    for j, kind in enumerate(ds.schema.feature_kinds):
        if kind == DISCRETE:
            centers.append(None)
        else:
            centers.append(fit_kmeans_1d(ds.rows[:, j], k, derive_seed(seed, j), restarts))
    return Discretizer(ds.schema.feature_names, ds.schema.feature_kinds, tuple(centers),
                       int(k), int(seed))


def apply(dz, ds):
    """Map every row of ``ds`` to bin indices under ``dz``."""
    if ds.d != len(dz.centers) or tuple(ds.schema.feature_kinds) != tuple(dz.feature_kinds):
        raise SchemaMismatch(
            f"dataset has {ds.d} features {ds.schema.feature_kinds}, discretizer was fitted "
            f"on {len(dz.centers)} features {dz.feature_kinds}")
    out = np.empty(ds.rows.shape, dtype=np.int64)
    for j, c in enumerate(dz.centers):
        col = ds.rows[:, j]
        if c is None:
            out[:, j] = np.rint(col).astype(np.int64)
        else:
            out[:, j] = _nearest(col, np.asarray(c, dtype=float))
    return DiscretizedDataset(ds.schema.feature_names, out, _alphabets(out), ds.labels)


def fit_apply(ds, k=5, seed=0):
    dz = fit(ds, k, seed)
    return dz, apply(dz, ds)


__all__ = ["CONTINUOUS", "DISCRETE", "Discretizer", "DiscretizedDataset", "apply", "fit",
           "fit_apply", "fit_kmeans_1d", "lloyd_1d"]
