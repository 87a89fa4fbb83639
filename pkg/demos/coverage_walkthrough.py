"""Combinatorial coverage and set-difference coverage on toy data.

Run with ``python3 demos/coverage_walkthrough.py``.
"""
import numpy as np

from sdcc.coverage import combinatorial_coverage, enumerate_t_way, sdcc, sdcc_datasets

# Three binary factors. Four rows is not enough to see every pair of values.
B = np.array([[0, 0, 0],
              [0, 1, 1],
              [1, 0, 1],
              [1, 1, 0]])

# Each member is a (factor indices, values) pair.
pairs = enumerate_t_way(B, 2)
print(len(pairs), "distinct 2-way combinations in B")
for m in pairs.sorted_members()[:5]:
    print("  ", m)

# With alphabets {0,1} there are 3 * 4 = 12 possible pairs, and B hits all of them.
print(combinatorial_coverage(B, [(0, 1)] * 3, 2))
print(combinatorial_coverage(B, [(0, 1)] * 3, 3))

# Set difference: what fraction of B's combinations never show up in A?
A = B[:2]
for t in (1, 2, 3):
    print("SDCC", sdcc(enumerate_t_way(B, t), enumerate_t_way(A, t)))

# An empty A leaves everything in B uncovered.
print("empty A:", sdcc_datasets(B, B[:0], 2))
