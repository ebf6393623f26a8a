"""Counter-based normal variates.

Every normal is a pure function of (seed, stream, path id, step, block), so a
path's noise does not depend on how paths are split across chunks or workers.
"""

import hashlib

import numpy as np

from . import kernels

STREAM_PATHS = 0
STREAM_BOOTSTRAP = 1

_TWO_PI = 2.0 * np.pi


def derive_seed(seed, *keys):
    """64-bit child seed from a base seed and integer or string keys."""
    parts = []
    for k in keys:
        if isinstance(k, str):
            parts.append(int.from_bytes(hashlib.sha256(k.encode()).digest()[:4], "little"))
        else:
            parts.append(int(k))
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(parts))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def standard_normals(seed, path_ids, n_steps, m, stream=STREAM_PATHS):
    """Standard normals of shape (len(path_ids), n_steps, m) by Box-Muller on Philox uniforms.

    Counter word 0 enumerates normal pairs along the path, so both Box-Muller
    outputs are used whatever ``m`` is.
    """
    path_ids = np.ascontiguousarray(path_ids, dtype=np.uint64)
    need = int(n_steps) * int(m)
    pairs = (need + 1) // 2
    u = kernels.uniform_block(int(seed), int(stream), path_ids, 0, pairs, 1)
    rad = np.sqrt(-2.0 * np.log(u[:, :, 0]))
    ang = _TWO_PI * u[:, :, 1]
    z = np.empty((path_ids.shape[0], 2 * pairs))
    z[:, 0::2] = rad * np.cos(ang)
    z[:, 1::2] = rad * np.sin(ang)
    return z[:, :need].reshape(path_ids.shape[0], int(n_steps), int(m))
