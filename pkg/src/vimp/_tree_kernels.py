"""Compiled CART kernels used by :mod:`vimp.forest`.

Trees are stored as flat parallel arrays: ``feature[k] == -1`` marks a leaf
whose prediction is ``value[k]``; otherwise rows with
``x[feature[k]] <= threshold[k]`` go to ``left[k]`` and the rest to
``right[k]``.

All randomness is supplied by the caller (bootstrap indices and a matrix of
uniform keys, one row per split attempt), so the kernels are deterministic
and free of hidden RNG state.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF = -1


@njit(cache=True, nogil=True)
def grow_tree(x, y, sample, keys, mtry, min_node, max_depth):
    n_rows = sample.shape[0]
    p = x.shape[1]
    cap = 2 * n_rows + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)

    idx = sample.copy()
    st_node = np.empty(cap, dtype=np.int64)
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n_rows
    st_depth[0] = 0
    top = 1
    n_nodes = 1
    attempt = 0

    vals = np.empty(n_rows, dtype=np.float64)
    ys = np.empty(n_rows, dtype=np.float64)
    cand = np.empty(mtry, dtype=np.int64)

    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        depth = st_depth[top]
        m = hi - lo

        total = 0.0
        y_min = y[idx[lo]]
        y_max = y_min
        for k in range(lo, hi):
            v = y[idx[k]]
            total += v
            if v < y_min:
                y_min = v
            if v > y_max:
                y_max = v
        mean = total / m
        value[node] = y_min if y_min == y_max else mean

        if m < 2 * min_node or y_min == y_max or (max_depth >= 0 and depth >= max_depth):
            continue

        # mtry distinct features: the smallest keys of this attempt's row,
        # visited in ascending feature order for deterministic tie-breaking.
        order = np.argsort(keys[attempt % keys.shape[0]])
        attempt += 1
        for j in range(mtry):
            cand[j] = order[j]
        cand.sort()

        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        for j in range(mtry):
            f = cand[j]
            for k in range(m):
                vals[k] = x[idx[lo + k], f]
            perm = np.argsort(vals[:m], kind="mergesort")
            for k in range(m):
                ys[k] = y[idx[lo + perm[k]]] - mean
            # centred sums make the gain exactly zero for a constant response
            s_left = 0.0
            s_all = 0.0
            for k in range(m):
                s_all += ys[k]
            for k in range(m - 1):
                s_left += ys[k]
                v_here = vals[perm[k]]
                v_next = vals[perm[k + 1]]
                if v_here < v_next:
                    n_l = k + 1
                    n_r = m - n_l
                    s_right = s_all - s_left
                    gain = s_left * s_left / n_l + s_right * s_right / n_r - s_all * s_all / m
                    if gain > best_gain:
                        best_gain = gain
                        best_feat = f
                        best_thr = 0.5 * (v_here + v_next)
                        if best_thr >= v_next:
                            best_thr = v_here

        if best_feat < 0 or best_gain <= 1e-14 * (y_max - y_min) ** 2:
            continue

        i = lo
        j = hi - 1
        while i <= j:
            if x[idx[i], best_feat] <= best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        split = i

        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1

        st_node[top] = n_nodes + 1
        st_lo[top] = split
        st_hi[top] = hi
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = n_nodes
        st_lo[top] = lo
        st_hi[top] = split
        st_depth[top] = depth + 1
        top += 1
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True, nogil=True)
def predict_packed(x, feature, threshold, left, right, value, offsets):
    n = x.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    for r in range(n):
        acc = 0.0
        for t in range(n_trees):
            base = offsets[t]
            k = base
            while feature[k] != LEAF:
                if x[r, feature[k]] <= threshold[k]:
                    k = base + left[k]
                else:
                    k = base + right[k]
            acc += value[k]
        out[r] = acc / n_trees
    return out
