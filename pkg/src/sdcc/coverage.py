"""t-way value combinations, combinatorial coverage and set-difference coverage.

A t-way combination is a strictly increasing tuple of factor indices paired
with the values a row takes on those factors.  Internally a combination is
packed into a single integer::

    code = subset_rank * stride + mixed_radix(values)

where ``subset_rank`` is the position of the factor tuple in lexicographic
order over all ``C(d, t)`` tuples and ``stride`` bounds every mixed-radix
value.  Set operations on combination sets then reduce to sorted integer
array operations.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import (EmptyReferenceSet, FactorMismatch, InvalidArgument,
                     TMismatch, TTooLarge, ValueOutsideUniverse)

_CODE_LIMIT = 2**62


class Combination(NamedTuple):
    factors: tuple
    values: tuple

    def __str__(self):
        return (",".join(map(str, self.factors)) + ":"
                + ",".join(map(str, self.values)))


@dataclass(frozen=True)
class CoverageResult:
    t: int
    numerator: int
    denominator: int
    ratio: float = field(init=False)

    def __post_init__(self):
        ratio = self.numerator / self.denominator if self.denominator > 0 else math.nan
        object.__setattr__(self, "ratio", ratio)

    def __str__(self):
        return f"t={self.t}: {self.numerator}/{self.denominator} = {self.ratio!r}"


def _as_rows(data):
    rows = getattr(data, "rows", data)
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise InvalidArgument(f"expected a 2-D array of rows, got shape {rows.shape}")
    if rows.size and not np.issubdtype(rows.dtype, np.integer):
        if not np.all(np.equal(np.mod(rows, 1), 0)):
            raise InvalidArgument("factor values must be integers")
    rows = rows.astype(np.int64, copy=False)
    if rows.size and rows.min() < 0:
        raise InvalidArgument("factor values must be nonnegative")
    return rows


def _check_t(t, d):
    if t < 1:
        raise InvalidArgument(f"t must be >= 1, got {t}")
    if t > d:
        raise TTooLarge(f"t={t} exceeds the number of factors d={d}")


class _Layout:
    """Mixed-radix packing of (factor tuple, value tuple) pairs into int64."""

    def __init__(self, d, t, radix):
        self.d = d
        self.t = t
        self.radix = tuple(int(r) for r in radix)
        if len(self.radix) != d:
            raise FactorMismatch(f"radix has {len(self.radix)} entries for {d} factors")
        self.subsets = np.array(list(combinations(range(d), t)), dtype=np.int64).reshape(-1, t)
        r = np.array(self.radix, dtype=object)
        # big-endian weights: last factor of the tuple varies fastest
        weights = np.ones(self.subsets.shape, dtype=object)
        for k in range(t - 2, -1, -1):
            weights[:, k] = weights[:, k + 1] * r[self.subsets[:, k + 1]]
        spans = weights[:, 0] * r[self.subsets[:, 0]] if t else np.ones(0, dtype=object)
        self.stride = int(max(spans)) if len(spans) else 1
        if self.stride * len(self.subsets) >= _CODE_LIMIT:
            raise InvalidArgument("combination space too large to index with 64-bit codes")
        self.weights = weights.astype(np.int64)

    def codes(self, rows):
        """(C(d, t), N) matrix of combination codes, one column per row."""
        n = rows.shape[0]
        out = np.repeat((np.arange(len(self.subsets), dtype=np.int64) * self.stride)[:, None],
                        n, axis=1)
        for k in range(self.t):
            out += rows[:, self.subsets[:, k]].T * self.weights[:, k][:, None]
        return out

    def decode(self, codes):
        codes = np.asarray(codes, dtype=np.int64)
        rank = codes // self.stride
        rem = codes % self.stride
        factors = self.subsets[rank]
        w = self.weights[rank]
        values = np.empty_like(factors)
        for k in range(self.t):
            values[:, k] = rem // w[:, k]
            rem = rem % w[:, k]
        return factors, values


@dataclass(frozen=True, eq=False)
class CombinationSet:
    """The distinct t-way combinations appearing in a dataset.

    ``codes`` is a sorted array of unique packed combinations; ``radix`` gives
    the per-factor value bound used to pack them.
    """

    t: int
    d: int
    radix: tuple
    codes: np.ndarray

    def __len__(self):
        return int(self.codes.size)

    def __eq__(self, other):
        if not isinstance(other, CombinationSet):
            return NotImplemented
        return self.t == other.t and self.d == other.d and self.members == other.members

    def __hash__(self):
        return hash((self.t, self.d, len(self)))

    @property
    def layout(self):
        return _Layout(self.d, self.t, self.radix)

    @property
    def members(self):
        factors, values = self.layout.decode(self.codes)
        return frozenset(Combination(tuple(map(int, f)), tuple(map(int, v)))
                         for f, v in zip(factors, values))

    def sorted_members(self):
        return sorted(self.members)

    def with_radix(self, radix):
        """Repack the same members under a larger per-factor radix."""
        radix = tuple(int(r) for r in radix)
        if radix == self.radix:
            return self
        if any(new < old for new, old in zip(radix, self.radix)):
            raise InvalidArgument("a repacking radix may not shrink")
        factors, values = self.layout.decode(self.codes)
        new = _Layout(self.d, self.t, radix)
        rank = np.array([_subset_rank(f, self.d) for f in map(tuple, factors)],
                        dtype=np.int64).reshape(-1)
        codes = rank * new.stride
        for k in range(self.t):
            codes = codes + values[:, k] * new.weights[rank, k]
        return CombinationSet(self.t, self.d, radix, np.sort(codes))

    def to_text(self):
        """One combination per line, ``factors:values``, in sorted order."""
        lines = [f"# t={self.t} d={self.d}"]
        lines.extend(str(c) for c in self.sorted_members())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, d=None):
        t = None
        members = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "t":
                        t = int(val)
                    elif key == "d" and d is None:
                        d = int(val)
                continue
            f, _, v = line.partition(":")
            members.append((tuple(int(x) for x in f.split(",")),
                            tuple(int(x) for x in v.split(","))))
        return from_members(members, t=t, d=d)


def _subset_rank(factors, d):
    """Lexicographic rank of a strictly increasing tuple among C(d, t) tuples."""
    t = len(factors)
    rank = 0
    prev = -1
    for i, f in enumerate(factors):
        for skipped in range(prev + 1, f):
            rank += math.comb(d - skipped - 1, t - i - 1)
        prev = f
    return rank


def from_members(members, t=None, d=None, radix=None):
    """Build a CombinationSet from ``(factors, values)`` pairs."""
    members = [(tuple(f), tuple(v)) for f, v in members]
    if t is None:
        if not members:
            raise InvalidArgument("cannot infer t from an empty member list")
        t = len(members[0][0])
    if d is None:
        d = max((max(f) for f, _ in members), default=t - 1) + 1
    _check_t(t, d)
    bound = [1] * d
    for f, v in members:
        if len(f) != t or len(v) != t or list(f) != sorted(set(f)) or f[-1] >= d:
            raise InvalidArgument(f"malformed combination {f}:{v}")
        for fi, vi in zip(f, v):
            if vi < 0:
                raise InvalidArgument("factor values must be nonnegative")
            bound[fi] = max(bound[fi], vi + 1)
    if radix is not None:
        bound = [max(b, int(r)) for b, r in zip(bound, radix)]
    layout = _Layout(d, t, bound)
    codes = np.array([_subset_rank(f, d) * layout.stride
                      + int(sum(int(vi) * int(w) for vi, w in
                                zip(v, layout.weights[_subset_rank(f, d)])))
                      for f, v in members], dtype=np.int64)
    return CombinationSet(t, d, tuple(bound), np.unique(codes))


def _radix_of(*row_arrays, d):
    bound = np.ones(d, dtype=np.int64)
    for rows in row_arrays:
        if rows.shape[0]:
            bound = np.maximum(bound, rows.max(axis=0) + 1)
    return tuple(int(b) for b in bound)


def combination_codes(data, t, radix=None):
    """Packed codes of every row's t-way combinations.

    Returns ``(codes, radix)`` where ``codes`` has shape ``(C(d, t), N)``.
    Pass the same ``radix`` for datasets that will be compared.
    """
    rows = _as_rows(data)
    d = rows.shape[1]
    _check_t(t, d)
    if radix is None:
        radix = _radix_of(rows, d=d)
    return _Layout(d, t, radix).codes(rows), tuple(radix)


def enumerate_t_way(data, t, radix=None):
    """Distinct t-way combinations appearing in the rows of ``data``.

    ``data`` is a DiscretizedDataset (or any object with an integer ``rows``
    matrix, or the matrix itself).
    """
    rows = _as_rows(data)
    n, d = rows.shape
    _check_t(t, d)
    if n == 0:
        raise InvalidArgument("cannot enumerate combinations of an empty dataset")
    if radix is None:
        radix = _radix_of(rows, d=d)
    codes, radix = combination_codes(rows, t, radix)
    return CombinationSet(t, d, radix, np.unique(codes))


def combinatorial_coverage(data, universe_alphabets, t):
    """Fraction of the universe's t-way combinations present in ``data``.

    The universe is the full Cartesian product of ``universe_alphabets``
    (one value list per factor); no combination is treated as invalid.
    """
    rows = _as_rows(data)
    n, d = rows.shape
    if len(universe_alphabets) != d:
        raise FactorMismatch(f"{len(universe_alphabets)} alphabets for {d} factors")
    _check_t(t, d)
    alphabets = [set(int(v) for v in a) for a in universe_alphabets]
    for f in range(d):
        observed = np.unique(rows[:, f])
        outside = [int(v) for v in observed if int(v) not in alphabets[f]]
        if outside:
            raise ValueOutsideUniverse(
                f"factor {f} takes values {outside} outside its universe alphabet")
    sizes = [len(a) for a in alphabets]
    denominator = sum(math.prod(sizes[f] for f in subset)
                      for subset in combinations(range(d), t))
    numerator = len(enumerate_t_way(rows, t)) if n else 0
    return CoverageResult(t, numerator, denominator)


def sdcc(b_set, a_set):
    """Set-difference combinatorial coverage ``|B \\ A| / |B|``."""
    if b_set.t != a_set.t:
        raise TMismatch(f"t differs: {b_set.t} vs {a_set.t}")
    if b_set.d != a_set.d:
        raise FactorMismatch(f"factor counts differ: {b_set.d} vs {a_set.d}")
    if len(b_set) == 0:
        raise EmptyReferenceSet("SDCC is undefined when the first set is empty")
    radix = tuple(max(x, y) for x, y in zip(b_set.radix, a_set.radix))
    b_codes = b_set.with_radix(radix).codes
    a_codes = a_set.with_radix(radix).codes
    shared = int(np.count_nonzero(np.isin(b_codes, a_codes, assume_unique=True)))
    return CoverageResult(b_set.t, b_codes.size - shared, int(b_codes.size))


def sdcc_datasets(d_b, d_a, t):
    """SDCC between two datasets; ``d_b`` is the reference set.

    An empty ``d_a`` gives 1.0 since nothing is removed from ``d_b``'s set.
    """
    rows_b = _as_rows(d_b)
    rows_a = _as_rows(d_a)
    if rows_b.shape[1] != rows_a.shape[1] and rows_a.shape[0]:
        raise FactorMismatch(f"factor counts differ: {rows_b.shape[1]} vs {rows_a.shape[1]}")
    d = rows_b.shape[1]
    _check_t(t, d)
    if rows_b.shape[0] == 0:
        raise EmptyReferenceSet("SDCC is undefined when the reference dataset is empty")
    radix = _radix_of(rows_b, rows_a.reshape(-1, d), d=d)
    b_set = enumerate_t_way(rows_b, t, radix)
    if rows_a.shape[0] == 0:
        return CoverageResult(t, len(b_set), len(b_set))
    return sdcc(b_set, enumerate_t_way(rows_a, t, radix))


def sdcc_from_codes(b_codes, a_codes):
    """SDCC from raw code arrays packed under one radix (any shape, duplicates allowed).

    Returns ``(numerator, denominator)``; an empty ``a_codes`` gives
    numerator = denominator.
    """
    b = np.unique(b_codes)
    if b.size == 0:
        raise EmptyReferenceSet("SDCC is undefined when the reference set is empty")
    if np.size(a_codes) == 0:
        return int(b.size), int(b.size)
    a = np.unique(a_codes)
    shared = int(np.count_nonzero(np.isin(b, a, assume_unique=True)))
    return int(b.size) - shared, int(b.size)
