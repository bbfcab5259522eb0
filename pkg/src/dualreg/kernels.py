"""Selects the kernel backend at import time.

The compiled extension is preferred when present; the numpy fallback is
bit-identical, so the choice only affects speed. Set DUALREG_KERNELS=python
to force the fallback (useful for benchmarking and debugging).
"""

from __future__ import annotations

import os

_choice = os.environ.get("DUALREG_KERNELS", "auto").lower()

if _choice not in ("auto", "compiled", "python"):
    raise ImportError(f"DUALREG_KERNELS must be auto|compiled|python, got {_choice!r}")

if _choice == "python":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "compiled":
            raise
        from . import _kernels_py as _impl

BACKEND = "compiled" if _impl.IS_COMPILED else "python"

initial_consensus_mask = _impl.initial_consensus_mask
greedy_pairwise_keep = _impl.greedy_pairwise_keep
transform_inlier_mask = _impl.transform_inlier_mask
