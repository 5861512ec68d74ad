"""Numba kernels for tree growing and traversal.

Both growers partition an index array in place and emit flat node arrays
(feature, threshold, children, payload).  Candidate thresholds are the
midpoints of adjacent distinct sorted feature values; ties on the split
score resolve to the lowest (feature index, threshold) pair because the
scan visits candidates in exactly that order and only strict improvements
are accepted.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GAIN_EPS = 1e-12


@njit(cache=True)
def _sample_features(m, k):
    # Fisher-Yates prefix draw, then sorted for the ascending-feature scan
    perm = np.arange(m)
    for i in range(k):
        j = i + np.random.randint(0, m - i)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return np.sort(perm[:k])


@njit(cache=True)
def grow_classification_tree(X, y, w, n_classes, max_depth, min_leaf,
                             max_features, seed):
    """Greedy CART with weighted Gini impurity decrease.

    max_depth < 0 means unlimited; max_features == 0 means all features.
    Returns (feature, threshold, left, right, hist[:, n_classes]).
    """
    n, m = X.shape
    if max_features > 0:
        np.random.seed(seed)
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    hist = np.zeros((max_nodes, n_classes), np.float64)

    idx = np.arange(n)
    stack = np.empty((max_nodes, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    node_count = 1

    vals = np.empty(n, np.float64)
    left_counts = np.empty(n_classes, np.float64)

    while top > 0:
        top -= 1
        node_id = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n_rows = end - start

        counts = np.zeros(n_classes, np.float64)
        for i in range(start, end):
            counts[y[idx[i]]] += w[idx[i]]
        hist[node_id] = counts
        total_w = 0.0
        nonzero = 0
        sum_sq = 0.0
        for k in range(n_classes):
            total_w += counts[k]
            sum_sq += counts[k] * counts[k]
            if counts[k] > 0.0:
                nonzero += 1
        if (nonzero <= 1 or n_rows < 2 * min_leaf
                or (max_depth >= 0 and depth >= max_depth)):
            continue
        parent_gini = 1.0 - sum_sq / (total_w * total_w)

        if 0 < max_features < m:
            feats = _sample_features(m, max_features)
        else:
            feats = np.arange(m)

        best_gain = _GAIN_EPS
        best_f = -1
        best_thr = 0.0
        for fi in range(feats.shape[0]):
            f = feats[fi]
            for i in range(n_rows):
                vals[i] = X[idx[start + i], f]
            order = np.argsort(vals[:n_rows])
            for k in range(n_classes):
                left_counts[k] = 0.0
            lw = 0.0
            sl = 0.0            # sum of squared left class weights
            sr = sum_sq
            for i in range(n_rows - 1):
                row = idx[start + order[i]]
                wi = w[row]
                c = y[row]
                sl += 2.0 * left_counts[c] * wi + wi * wi
                sr += -2.0 * (counts[c] - left_counts[c]) * wi + wi * wi
                left_counts[c] += wi
                lw += wi
                v_here = vals[order[i]]
                v_next = vals[order[i + 1]]
                if v_here == v_next:
                    continue
                if i + 1 < min_leaf or n_rows - i - 1 < min_leaf:
                    continue
                rw = total_w - lw
                gini_left = 1.0 - sl / (lw * lw)
                gini_right = 1.0 - sr / (rw * rw)
                gain = parent_gini - (lw * gini_left + rw * gini_right) / total_w
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = 0.5 * (v_here + v_next)
        if best_f < 0:
            continue

        mid = _partition(X, idx, start, end, best_f, best_thr)
        if mid == start or mid == end:
            continue
        feature[node_id] = best_f
        threshold[node_id] = best_thr
        left_id = node_count
        right_id = node_count + 1
        node_count += 2
        left[node_id] = left_id
        right[node_id] = right_id
        stack[top, 0] = right_id
        stack[top, 1] = mid
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = left_id
        stack[top, 1] = start
        stack[top, 2] = mid
        stack[top, 3] = depth + 1
        top += 1

    return (feature[:node_count], threshold[:node_count], left[:node_count],
            right[:node_count], hist[:node_count])


@njit(cache=True)
def _partition(X, idx, start, end, f, thr):
    """In-place partition of idx[start:end): rows with X[:, f] <= thr first."""
    i = start
    j = end - 1
    while i <= j:
        if X[idx[i], f] <= thr:
            i += 1
        else:
            tmp = idx[i]
            idx[i] = idx[j]
            idx[j] = tmp
            j -= 1
    return i


@njit(cache=True)
def grow_regression_tree(X, g, h, lam, max_depth, min_leaf):
    """Second-order regression tree on gradient/hessian pairs.

    Split gain is the usual half-sum-of-scores improvement with L2 term
    `lam`; leaf weight is -G / (H + lam).
    Returns (feature, threshold, left, right, value).
    """
    n, m = X.shape
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes, np.float64)

    idx = np.arange(n)
    stack = np.empty((max_nodes, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    node_count = 1
    vals = np.empty(n, np.float64)

    while top > 0:
        top -= 1
        node_id = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n_rows = end - start

        G = 0.0
        H = 0.0
        for i in range(start, end):
            G += g[idx[i]]
            H += h[idx[i]]
        value[node_id] = -G / (H + lam)
        if n_rows < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue
        parent_score = G * G / (H + lam)

        best_gain = _GAIN_EPS
        best_f = -1
        best_thr = 0.0
        for f in range(m):
            for i in range(n_rows):
                vals[i] = X[idx[start + i], f]
            order = np.argsort(vals[:n_rows])
            gl = 0.0
            hl = 0.0
            for i in range(n_rows - 1):
                row = idx[start + order[i]]
                gl += g[row]
                hl += h[row]
                v_here = vals[order[i]]
                v_next = vals[order[i + 1]]
                if v_here == v_next:
                    continue
                if i + 1 < min_leaf or n_rows - i - 1 < min_leaf:
                    continue
                gr = G - gl
                hr = H - hl
                gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam)
                              - parent_score)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = 0.5 * (v_here + v_next)
        if best_f < 0:
            continue

        mid = _partition(X, idx, start, end, best_f, best_thr)
        if mid == start or mid == end:
            continue
        feature[node_id] = best_f
        threshold[node_id] = best_thr
        left_id = node_count
        right_id = node_count + 1
        node_count += 2
        left[node_id] = left_id
        right[node_id] = right_id
        stack[top, 0] = right_id
        stack[top, 1] = mid
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = left_id
        stack[top, 1] = start
        stack[top, 2] = mid
        stack[top, 3] = depth + 1
        top += 1

    return (feature[:node_count], threshold[:node_count], left[:node_count],
            right[:node_count], value[:node_count])


@njit(cache=True)
def apply_tree(X, feature, threshold, left, right):
    """Leaf node index for every row."""
    n = X.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
