"""Pure-numpy implementations of the hot numeric kernels.

Used when the compiled extension is unavailable or when ``BOXSCOUT_PURE=1``
is set.  Function contracts mirror ``_native`` exactly; the test suite checks
the two backends agree bit-for-bit on random inputs.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def margin_argmax(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row squared 1-vs-2 margin value and argmax index.

    ``scores`` is an (N, K) array, K >= 2.  Returns ``(margins, argmax)``
    where ``margins[i] = (1 - (top1 - top2))**2`` and ``argmax[i]`` is the
    lowest index attaining the row maximum.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    n, k = scores.shape
    if k < 2:
        raise ValueError("need at least 2 classes")
    top_idx = np.argmax(scores, axis=1)
    top_val = scores[np.arange(n), top_idx]
    rest = scores.copy()
    rest[np.arange(n), top_idx] = -np.inf
    second_val = rest.max(axis=1)
    diff = top_val - second_val
    margins = (1.0 - diff) ** 2
    return margins, top_idx.astype(np.int64)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between two sets of corner boxes (xmin, ymin, xmax, ymax).

    Zero-area boxes yield IoU 0 against everything.
    """
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    ix1 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy1 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix2 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy2 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(ix2 - ix1, 0.0, None) * np.clip(iy2 - iy1, 0.0, None)
    area_a = np.clip(a[:, 2] - a[:, 0], 0.0, None) * np.clip(a[:, 3] - a[:, 1], 0.0, None)
    area_b = np.clip(b[:, 2] - b[:, 0], 0.0, None) * np.clip(b[:, 3] - b[:, 1], 0.0, None)
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def ap_from_flags(tp: np.ndarray, n_positive: int) -> float:
    """All-points average precision from confidence-ranked tp/fp flags.

    ``tp`` is a 0/1 array ordered by descending confidence (ignored
    detections already removed).  Precision is made monotonically
    non-increasing from the right before integrating over recall.
    """
    if n_positive <= 0:
        return 0.0
    tp = np.asarray(tp, dtype=np.float64).ravel()
    if tp.size == 0:
        return 0.0
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(1.0 - tp)
    recall = tp_cum / float(n_positive)
    precision = tp_cum / (tp_cum + fp_cum)
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - prev_recall) * precision))
