# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython kernel: best Gini split of one presorted feature column."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def best_split_sorted(double[::1] xs, double[::1] ys, Py_ssize_t min_leaf):
    """Scan split points of a column sorted ascending, labels aligned.

    Returns (weighted_gini, threshold, left_count) for the best admissible
    split, or (inf, nan, 0) when no split leaves both sides >= min_leaf.
    Ties keep the earliest (lowest-threshold) candidate.
    """
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i, best_i = -1
    cdef double ones_left = 0.0, ones_total = 0.0
    cdef double nl, nr, pl, pr, gini, best_gini = np.inf

    for i in range(n):
        ones_total += ys[i]

    for i in range(n - 1):
        ones_left += ys[i]
        if i + 1 < min_leaf:
            continue
        if n - i - 1 < min_leaf:
            break
        if xs[i] == xs[i + 1]:
            continue
        nl = i + 1.0
        nr = n - nl
        pl = ones_left / nl
        pr = (ones_total - ones_left) / nr
        gini = nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr)
        if gini < best_gini:
            best_gini = gini
            best_i = i

    if best_i < 0:
        return np.inf, np.nan, 0
    return best_gini / n, 0.5 * (xs[best_i] + xs[best_i + 1]), best_i + 1
