"""Kernel selection: compiled closure extension with pure-Python fallback.

The compiled kernel handles up to 64 units (uint64 masks); bigger trees —
and environments where the extension did not build, or where
``MODELFORM_PURE_KERNEL=1`` is set — use the pure implementation.
"""

from __future__ import annotations

import os
from array import array
from typing import Sequence

from . import _closure_py

_compiled = None
if os.environ.get("MODELFORM_PURE_KERNEL") != "1":
    try:
        from . import _closure as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None

KERNEL = "compiled" if _compiled is not None else "pure"


def close_required(n: int, base: int, srcs: Sequence[int], dsts: Sequence[int], included: int) -> int:
    """Dispatch the required-units fixpoint to the best available kernel."""
    if _compiled is not None and n <= 64:
        if not isinstance(srcs, array):
            srcs = array("i", srcs)
            dsts = array("i", dsts)
        return _compiled.close_required_u64(base, srcs, dsts, included)
    return _closure_py.close_required(base, srcs, dsts, included)
