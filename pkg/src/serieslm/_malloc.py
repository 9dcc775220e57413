"""Optional glibc malloc tuning for allocation-heavy simulation loops.

The Monte Carlo drivers allocate and free many medium-sized arrays per
replication.  With glibc defaults those blocks are mmap'd and returned to the
kernel on free, so every replication pays page-fault costs again; on some
kernels this dominates the runtime.  Raising the mmap threshold and disabling
trim keeps freed blocks on the heap for reuse.

Callers opt in explicitly (the CLI and the test suite do); a library import
never changes process-global allocator state on its own.  No-op off glibc.
"""

from __future__ import annotations

import ctypes

_M_TRIM_THRESHOLD = -1
_M_MMAP_THRESHOLD = -3

_done = False


def prefer_heap_reuse() -> bool:
    """Raise the malloc mmap threshold and disable trim; True on success."""
    global _done
    if _done:
        return True
    try:
        libc = ctypes.CDLL("libc.so.6", use_errno=True)
        ok = bool(libc.mallopt(_M_MMAP_THRESHOLD, 1 << 30))
        ok = bool(libc.mallopt(_M_TRIM_THRESHOLD, -1)) and ok
    except OSError:
        return False
    _done = ok
    return ok
