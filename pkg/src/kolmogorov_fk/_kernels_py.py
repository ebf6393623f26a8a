"""Pure Python / NumPy versions of the compiled kernels.

Every function here matches the corresponding one in ``_kernels.pyx`` bit for bit;
the test-suite checks this whenever the extension is built.
"""

import math

import numpy as np

PHILOX_M0 = np.uint64(0xD2511F53)
PHILOX_M1 = np.uint64(0xCD9E8D57)
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def _philox_rounds(c0, c1, c2, c3, k0, k1):
    # all counter words are uint64 arrays holding 32-bit values
    for r in range(10):
        if r > 0:
            k0 = (k0 + PHILOX_W0) & 0xFFFFFFFF
            k1 = (k1 + PHILOX_W1) & 0xFFFFFFFF
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        hi0 = p0 >> _SHIFT32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SHIFT32
        lo1 = p1 & _MASK32
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            lo1,
            hi0 ^ c3 ^ np.uint64(k1),
            lo0,
        )
    return c0, c1, c2, c3


def philox4x32(counters, k0, k1):
    counters = np.asarray(counters, dtype=np.uint32)
    words = [counters[:, i].astype(np.uint64) for i in range(4)]
    out = _philox_rounds(*words, int(k0) & 0xFFFFFFFF, int(k1) & 0xFFFFFFFF)
    return np.stack(out, axis=1).astype(np.uint32)


def uniform_block(seed, stream, path_ids, step0, n_steps, n_blocks):
    path_ids = np.asarray(path_ids, dtype=np.uint64)
    n = path_ids.shape[0]
    shape = (n, n_steps, n_blocks)
    steps = (np.uint64(step0) + np.arange(n_steps, dtype=np.uint64)) & _MASK32
    step = np.broadcast_to(steps[None, :, None], shape).reshape(-1)
    pid = np.broadcast_to(path_ids[:, None, None], shape).reshape(-1)
    block = np.broadcast_to(np.arange(n_blocks, dtype=np.uint64), shape).reshape(-1)
    c0 = step.copy()
    c1 = pid & _MASK32
    c2 = pid >> _SHIFT32
    c3 = block | np.uint64((int(stream) << 24) & 0xFFFFFFFF)
    seed = int(seed)
    w0, w1, w2, w3 = _philox_rounds(c0, c1, c2, c3, seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF)
    six = np.uint64(6)
    a = ((w0 >> six) << np.uint64(26)) | (w1 >> six)
    z = ((w2 >> six) << np.uint64(26)) | (w3 >> six)
    scale = 1.0 / 4503599627370496.0
    out = np.empty((n * n_steps * n_blocks, 2), dtype=np.float64)
    out[:, 0] = (a.astype(np.float64) + 0.5) * scale
    out[:, 1] = (z.astype(np.float64) + 0.5) * scale
    return out.reshape(n, n_steps, 2 * n_blocks)


def thomas(lower, diag, upper, rhs):
    lo = np.asarray(lower, dtype=np.float64).tolist()
    di = np.asarray(diag, dtype=np.float64).tolist()
    up = np.asarray(upper, dtype=np.float64).tolist()
    r = np.asarray(rhs, dtype=np.float64).tolist()
    n = len(di)
    cp = [0.0] * n
    dp = [0.0] * n
    if di[0] == 0.0:
        raise ZeroDivisionError("zero pivot at row 0")
    cp[0] = up[0] / di[0] if n > 1 else 0.0
    dp[0] = r[0] / di[0]
    for i in range(1, n):
        m = di[i] - lo[i] * cp[i - 1]
        if m == 0.0:
            raise ZeroDivisionError("zero pivot at row %d" % i)
        cp[i] = up[i] / m if i < n - 1 else 0.0
        dp[i] = (r[i] - lo[i] * dp[i - 1]) / m
    x = [0.0] * n
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x, dtype=np.float64)


def _exact_ratio(points, values, i, j, beta):
    acc = 0.0
    for k in range(points.shape[1]):
        diff = float(points[i, k]) - float(points[j, k])
        acc = acc + diff * diff
    return abs(float(values[i]) - float(values[j])) / math.pow(math.sqrt(acc), beta)


def holder_max(points, values, beta):
    points = np.ascontiguousarray(points, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    n, d = points.shape
    best, bi, bj = 0.0, -1, -1
    for i in range(n - 1):
        diff = points[i, 0] - points[i + 1:, 0]
        acc = diff * diff
        for k in range(1, d):
            diff = points[i, k] - points[i + 1:, k]
            acc = acc + diff * diff
        zero = np.flatnonzero(acc == 0.0)
        if zero.size:
            raise ValueError("duplicate points at indices %d and %d" % (i, i + 1 + zero[0]))
        ratio = np.abs(values[i] - values[i + 1:]) / np.power(np.sqrt(acc), beta)
        top = ratio.max()
        if bi >= 0 and top < best * (1.0 - 1e-12):
            continue
        # resolve near-ties with the exact scalar formula so the result matches the C loop
        for j in np.flatnonzero(ratio >= top * (1.0 - 1e-12)):
            jj = i + 1 + int(j)
            r = _exact_ratio(points, values, i, jj, beta)
            if r > best or bi < 0:
                best, bi, bj = r, i, jj
    return best, bi, bj
