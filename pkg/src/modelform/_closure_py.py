"""Pure-Python closure kernel.

Same contract as the compiled extension in ``_closure.pyx``; works for any
number of units because masks are Python ints.
"""

from __future__ import annotations

from typing import Sequence


def close_required(base: int, srcs: Sequence[int], dsts: Sequence[int], included: int) -> int:
    """Least fixpoint of ``base`` under edges whose source is included-or-required.

    ``base``/``included`` are bitmasks over unit indices; edge *i* runs from
    ``srcs[i]`` to ``dsts[i]``.  Returns the required-units mask.
    """
    required = base
    changed = True
    while changed:
        changed = False
        reach = required | included
        for i in range(len(srcs)):
            if (reach >> srcs[i]) & 1 and not (required >> dsts[i]) & 1:
                required |= 1 << dsts[i]
                reach |= 1 << dsts[i]
                changed = True
    return required
