"""Numeric kernel backend selection.

The compiled extension is preferred when present; setting ``BOXSCOUT_PURE=1``
(or a missing build) selects the numpy fallback.  ``BACKEND`` names the one
in use.
"""

import os

if os.environ.get("BOXSCOUT_PURE") == "1":
    from ._fallback import BACKEND, ap_from_flags, iou_matrix, margin_argmax
else:
    try:
        from ._native import BACKEND, ap_from_flags, iou_matrix, margin_argmax
    except ImportError:
        from ._fallback import BACKEND, ap_from_flags, iou_matrix, margin_argmax

__all__ = ["BACKEND", "ap_from_flags", "iou_matrix", "margin_argmax"]
