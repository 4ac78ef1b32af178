# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled closure kernel: required-units fixpoint over uint64 bitmasks.

This is the hot inner loop of constraint checking (it runs once per edit
with autocheck on, and a few hundred thousand times in the randomized
check-vs-enumeration suite).  Semantics match ``_closure_py.close_required``
for up to 64 units; the dispatcher in ``_kernel`` falls back to the pure
version for larger trees.
"""


def close_required_u64(unsigned long long base,
                       int[::1] srcs,
                       int[::1] dsts,
                       unsigned long long included):
    cdef unsigned long long required = base
    cdef unsigned long long reach
    cdef Py_ssize_t i, m = srcs.shape[0]
    cdef bint changed = True
    cdef unsigned long long one = 1
    while changed:
        changed = False
        reach = required | included
        for i in range(m):
            if (reach >> srcs[i]) & one and not (required >> dsts[i]) & one:
                required |= one << dsts[i]
                reach |= one << dsts[i]
                changed = True
    return required
