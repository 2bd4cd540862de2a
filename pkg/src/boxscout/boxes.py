"""Box geometry helpers.

Two box formats are used throughout:

* pixel corners ``(xmin, ymin, xmax, ymax)`` as stored in annotations,
* normalized ``(cx, cy, w, h)`` in [0, 1] as reported by detectors.

Conversions treat corners as continuous coordinates (no +1 pixel widening).
"""

from __future__ import annotations


def corners_to_center(xmin: float, ymin: float, xmax: float, ymax: float,
                      width: float, height: float) -> tuple[float, float, float, float]:
    """Pixel corners -> normalized (cx, cy, w, h) for an image of given size."""
    cx = (xmin + xmax) / 2.0 / width
    cy = (ymin + ymax) / 2.0 / height
    w = (xmax - xmin) / width
    h = (ymax - ymin) / height
    return cx, cy, w, h


def center_to_corners(cx: float, cy: float, w: float, h: float,
                      width: float, height: float) -> tuple[float, float, float, float]:
    """Normalized (cx, cy, w, h) -> pixel corners for an image of given size."""
    xmin = (cx - w / 2.0) * width
    ymin = (cy - h / 2.0) * height
    xmax = (cx + w / 2.0) * width
    ymax = (cy + h / 2.0) * height
    return xmin, ymin, xmax, ymax


def clamp_center_box(cx: float, cy: float, w: float, h: float,
                     min_extent: float = 1e-3) -> tuple[float, float, float, float]:
    """Clamp a normalized center box so its corners stay inside the unit square.

    Degenerate extents are floored at ``min_extent`` so downstream corner
    conversion never produces an inverted box.
    """
    w = min(max(w, min_extent), 1.0)
    h = min(max(h, min_extent), 1.0)
    half_w, half_h = w / 2.0, h / 2.0
    cx = min(max(cx, half_w), 1.0 - half_w)
    cy = min(max(cy, half_h), 1.0 - half_h)
    return cx, cy, w, h
