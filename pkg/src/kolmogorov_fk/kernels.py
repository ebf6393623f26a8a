"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the NumPy
fallback is used.  Setting ``KOLMOGOROV_FK_PURE=1`` forces the fallback.
"""

import os

from . import _kernels_py

try:
    if os.environ.get("KOLMOGOROV_FK_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"
_active = BACKENDS[BACKEND]


def use_backend(name):
    """Switch the active backend (``"compiled"`` or ``"python"``); returns the previous name."""
    global BACKEND, _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}")
    previous = BACKEND
    BACKEND, _active = name, BACKENDS[name]
    return previous


def philox4x32(counters, k0, k1):
    return _active.philox4x32(counters, k0, k1)


def uniform_block(seed, stream, path_ids, step0, n_steps, n_blocks):
    return _active.uniform_block(seed, stream, path_ids, step0, n_steps, n_blocks)


def thomas(lower, diag, upper, rhs):
    return _active.thomas(lower, diag, upper, rhs)


def holder_max(points, values, beta):
    return _active.holder_max(points, values, beta)
