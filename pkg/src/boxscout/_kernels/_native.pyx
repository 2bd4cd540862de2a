# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot numeric kernels (see ``_fallback`` for contracts)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "native"


def margin_argmax(scores):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] s = \
        np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t k = s.shape[1]
    if k < 2:
        raise ValueError("need at least 2 classes")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] margins = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] arg = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t i, j, best_j
    cdef double top1, top2, v, d
    for i in range(n):
        best_j = 0
        top1 = s[i, 0]
        top2 = -1e308
        for j in range(1, k):
            v = s[i, j]
            if v > top1:
                top2 = top1
                top1 = v
                best_j = j
            elif v > top2:
                top2 = v
        d = 1.0 - (top1 - top2)
        margins[i] = d * d
        arg[i] = best_j
    return margins, arg


def iou_matrix(a, b):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] aa = \
        np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] bb = \
        np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t na = aa.shape[0]
    cdef Py_ssize_t nb = bb.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((na, nb), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double ix1, iy1, ix2, iy2, iw, ih, inter, area_a, area_b, union
    for i in range(na):
        area_a = max(aa[i, 2] - aa[i, 0], 0.0) * max(aa[i, 3] - aa[i, 1], 0.0)
        for j in range(nb):
            ix1 = max(aa[i, 0], bb[j, 0])
            iy1 = max(aa[i, 1], bb[j, 1])
            ix2 = min(aa[i, 2], bb[j, 2])
            iy2 = min(aa[i, 3], bb[j, 3])
            iw = ix2 - ix1
            ih = iy2 - iy1
            if iw <= 0.0 or ih <= 0.0:
                continue
            inter = iw * ih
            area_b = max(bb[j, 2] - bb[j, 0], 0.0) * max(bb[j, 3] - bb[j, 1], 0.0)
            union = area_a + area_b - inter
            if union > 0.0:
                out[i, j] = inter / union
    return out


def ap_from_flags(tp, n_positive):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t = \
        np.ascontiguousarray(tp, dtype=np.float64).ravel()
    cdef Py_ssize_t n = t.shape[0]
    cdef long npos = int(n_positive)
    if npos <= 0 or n == 0:
        return 0.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] recall = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] precision = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double tp_cum = 0.0, fp_cum = 0.0, env, ap, prev
    for i in range(n):
        if t[i] > 0.0:
            tp_cum += 1.0
        else:
            fp_cum += 1.0
        recall[i] = tp_cum / npos
        precision[i] = tp_cum / (tp_cum + fp_cum)
    env = 0.0
    for i in range(n - 1, -1, -1):
        if precision[i] > env:
            env = precision[i]
        precision[i] = env
    ap = 0.0
    prev = 0.0
    for i in range(n):
        ap += (recall[i] - prev) * precision[i]
        prev = recall[i]
    return ap
