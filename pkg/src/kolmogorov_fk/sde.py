"""Euler-Maruyama paths, first-variation matrices and strong-error ladders."""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .problem.expression import ExpressionDomainError
from .problem.spec import ProblemSpec
from .rng import STREAM_PATHS, standard_normals

DEFAULT_CHUNK = 4096
_CHUNK_BUDGET = 2**22  # doubles per chunk for the largest stored array


class SimulationError(RuntimeError):
    def __init__(self, message, path=None, step=None):
        super().__init__(message)
        self.path = path
        self.step = step


class SimulationOverflow(SimulationError):
    pass


class VariationWarning(RuntimeWarning):
    pass


@dataclass
class PathBatch:
    t_grid: np.ndarray
    states: np.ndarray  # (n_paths, n_steps+1, d)
    variation: Optional[np.ndarray] = None  # (n_paths, n_steps+1, d, d)
    discount_integral: Optional[np.ndarray] = None  # (n_paths, n_steps+1)
    seed: int = 0
    antithetic: bool = False
    scheme: str = "euler-maruyama"
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return self.states.shape[0]

    @property
    def n_steps(self):
        return self.states.shape[1] - 1

    @property
    def dt(self):
        return (self.t_grid[-1] - self.t_grid[0]) / self.n_steps


def time_grid(t, T, n_steps):
    grid = np.linspace(float(t), float(T), int(n_steps) + 1)
    grid[-1] = float(T)
    return grid


def chunk_size(n_steps, d, with_variation=False, chunk=None):
    if chunk is not None:
        return int(chunk)
    per_path = (n_steps + 1) * (d * d if with_variation else max(d, 1))
    return max(1, min(DEFAULT_CHUNK, _CHUNK_BUDGET // per_path))


def path_noise(seed, first, count, n_steps, m, antithetic):
    """Standard normals for paths ``first .. first+count-1``, shape (count, n_steps, m)."""
    idx = np.arange(first, first + count, dtype=np.int64)
    if not antithetic:
        return standard_normals(seed, idx.astype(np.uint64), n_steps, m, stream=STREAM_PATHS)
    pair = idx // 2
    z = standard_normals(seed, pair.astype(np.uint64), n_steps, m, stream=STREAM_PATHS)
    odd = (idx % 2 == 1)
    z[odd] = -z[odd]
    return z


def cumulative_trapezoid(values, dt):
    """Running trapezoid integral along axis 1 with a fixed accumulation order."""
    out = np.zeros(values.shape)
    # cumsum adds sequentially, so this equals the explicit recursion bit for bit
    np.cumsum(0.5 * dt * (values[:, :-1] + values[:, 1:]), axis=1, out=out[:, 1:])
    return out


def _guard(fn, first, step):
    try:
        return fn()
    except ExpressionDomainError as exc:
        row = exc.index if exc.index is not None else 0
        raise SimulationError(f"coefficient evaluation failed on path {first + row}, step {step}: {exc}", first + row, step) from exc


def euler_chunk(spec: ProblemSpec, t_grid, x0, dW, first=0, variation=False, discount=True):
    """Run the recursion for one chunk given Brownian increments ``dW`` (n, N, m)."""
    n, N, m = dW.shape
    d = spec.d
    X = np.empty((n, N + 1, d))
    X[:, 0] = x0
    J = None
    if variation:
        J = np.empty((n, N + 1, d, d))
        J[:, 0] = np.eye(d)
    cvals = np.empty((n, N + 1)) if discount else None
    for k in range(N):
        tk = float(t_grid[k])
        dt = float(t_grid[k + 1] - t_grid[k])
        xk = X[:, k]
        b = _guard(lambda: spec.b(tk, xk), first, k)
        s = _guard(lambda: spec.sigma(tk, xk), first, k)
        if discount:
            cvals[:, k] = _guard(lambda: spec.c(tk, xk), first, k)
        inc = b * dt
        for j in range(m):
            inc = inc + s[:, :, j] * dW[:, k, j][:, None]
        X[:, k + 1] = xk + inc
        if variation:
            gb = _guard(lambda: spec.grad_b(tk, xk), first, k)
            gs = _guard(lambda: spec.grad_sigma(tk, xk), first, k)
            Jk = J[:, k]
            dJ = np.einsum("nij,njl->nil", gb, Jk) * dt
            for j in range(m):
                dJ = dJ + np.einsum("nij,njl->nil", gs[:, :, j, :], Jk) * dW[:, k, j][:, None, None]
            J[:, k + 1] = Jk + dJ
        bad = ~np.isfinite(X[:, k + 1]).all(axis=1)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise SimulationOverflow(
                f"non-finite state on path {first + row} at step {k + 1} (s={t_grid[k + 1]:.6g})", first + row, k + 1
            )
    if discount:
        tN = float(t_grid[N])
        cvals[:, N] = _guard(lambda: spec.c(tN, X[:, N]), first, N)
        integral = cumulative_trapezoid(cvals, float(t_grid[1] - t_grid[0]))
    else:
        integral = None
    return X, J, integral


def map_chunks(spec, t, x, n_paths, n_steps, seed, antithetic, variation, fn, n_workers=1, chunk=None):
    """Simulate chunk by chunk and return ``[fn(chunk_batch) ...]`` in path order.

    Chunk boundaries depend only on (n_steps, d, chunk), never on ``n_workers``.
    """
    if n_paths < 1 or n_steps < 1:
        raise ValueError("n_paths and n_steps must be positive")
    if not (t < spec.T):
        raise ValueError(f"start time {t} must be before T={spec.T}")
    if antithetic and n_paths % 2:
        raise ValueError("antithetic sampling needs an even number of paths")
    x0 = np.broadcast_to(np.asarray(x, dtype=np.float64), (spec.d,))
    t_grid = time_grid(t, spec.T, n_steps)
    sq = math.sqrt(float(t_grid[1] - t_grid[0]))
    size = chunk_size(n_steps, spec.d, variation, chunk)
    if antithetic and size % 2:
        size += 1
    starts = list(range(0, n_paths, size))

    def work(first):
        count = min(size, n_paths - first)
        dW = path_noise(seed, first, count, n_steps, spec.m, antithetic) * sq
        X, J, I = euler_chunk(spec, t_grid, x0, dW, first, variation)
        return fn(PathBatch(t_grid, X, J, I, int(seed), bool(antithetic)))

    if n_workers and n_workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(work, starts))
    return [work(s) for s in starts]


def _simulate(spec, t, x, n_paths, n_steps, seed, antithetic, variation, n_workers, chunk):
    parts = map_chunks(spec, t, x, n_paths, n_steps, seed, antithetic, variation, lambda b: b, n_workers, chunk)
    states = np.concatenate([p.states for p in parts])
    J = np.concatenate([p.variation for p in parts]) if variation else None
    disc = np.concatenate([p.discount_integral for p in parts])
    batch = PathBatch(parts[0].t_grid, states, J, disc, int(seed), bool(antithetic))
    if variation:
        check_variation(batch)
    return batch


def check_variation(batch):
    J = batch.variation
    det = np.linalg.det(J) if J.shape[-1] > 1 else J[..., 0, 0]
    worst = float(det.min())
    batch.diagnostics["min_det_variation"] = worst
    if worst <= 0:
        warnings.warn(f"first-variation matrix lost invertibility (min det {worst:.3g})", VariationWarning)
    return worst


def simulate_paths(spec: ProblemSpec, t, x, n_paths, n_steps, seed=0, antithetic=False, n_workers=1, chunk=None) -> PathBatch:
    """Euler-Maruyama paths from ``(t, x)`` to ``T`` with running trapezoid discount integrals."""
    return _simulate(spec, t, x, n_paths, n_steps, seed, antithetic, False, n_workers, chunk)


def simulate_with_variation(spec: ProblemSpec, t, x, n_paths, n_steps, seed=0, antithetic=False, n_workers=1, chunk=None) -> PathBatch:
    """As :func:`simulate_paths`, plus ``J = dX/dx`` driven by the same increments."""
    return _simulate(spec, t, x, n_paths, n_steps, seed, antithetic, True, n_workers, chunk)


def write_paths_csv(batch: PathBatch, path):
    d = batch.states.shape[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "step", "s"] + [f"x{i + 1}" for i in range(d)] + ["discount"])
        disc = batch.discount_integral
        for p in range(batch.n_paths):
            for k in range(batch.n_steps + 1):
                row = [p, k, repr(float(batch.t_grid[k]))]
                row += [repr(float(v)) for v in batch.states[p, k]]
                row.append(repr(float(disc[p, k])) if disc is not None else "")
                w.writerow(row)


# ---------------------------------------------------------------- strong error


@dataclass
class ConvergenceReport:
    step_sizes: List[float]
    n_steps: List[int]
    errors: List[float]
    error_halfwidths: List[float]
    slope: float
    slope_ci: tuple
    reference_steps: int
    n_paths: int
    seed: int

    def to_dict(self):
        return {
            "step_sizes": self.step_sizes,
            "n_steps": self.n_steps,
            "errors": self.errors,
            "error_halfwidths": self.error_halfwidths,
            "slope": self.slope,
            "slope_ci": list(self.slope_ci),
            "reference_steps": self.reference_steps,
            "n_paths": self.n_paths,
            "seed": self.seed,
        }


def _fit_slope(dts, errs):
    keep = np.asarray(errs) > 0
    if keep.sum() < 2:
        return math.nan
    lx, ly = np.log(np.asarray(dts)[keep]), np.log(np.asarray(errs)[keep])
    return float(np.polyfit(lx, ly, 1)[0])


def strong_error(spec: ProblemSpec, t, x, step_ladder, n_paths, seed=0, n_bootstrap=200) -> ConvergenceReport:
    """Strong errors of the terminal state against the finest ladder level.

    Coarse increments are sums of fine ones, so all levels share one Brownian path.
    """
    ladder = sorted(int(n) for n in step_ladder)
    if len(ladder) < 3:
        raise ValueError("ladder needs at least three levels")
    if len(set(ladder)) != len(ladder) or any(b % a for a, b in zip(ladder, ladder[1:])):
        raise ValueError(f"ladder {step_ladder} is not nested")
    fine = ladder[-1]
    x0 = np.broadcast_to(np.asarray(x, dtype=np.float64), (spec.d,))
    size = chunk_size(fine, spec.d)
    diffs = {n: [] for n in ladder[:-1]}
    for first in range(0, n_paths, size):
        count = min(size, n_paths - first)
        dW_fine = path_noise(seed, first, count, fine, spec.m, False) * math.sqrt((spec.T - t) / fine)
        ref, _, _ = euler_chunk(spec, time_grid(t, spec.T, fine), x0, dW_fine, first, discount=False)
        for n in ladder[:-1]:
            r = fine // n
            dW = dW_fine.reshape(count, n, r, spec.m).sum(axis=2)
            Xn, _, _ = euler_chunk(spec, time_grid(t, spec.T, n), x0, dW, first, discount=False)
            diffs[n].append(np.linalg.norm(Xn[:, -1] - ref[:, -1], axis=1))
    levels = ladder[:-1]
    per_path = np.stack([np.concatenate(diffs[n]) for n in levels])  # (levels, n_paths)
    errors = per_path.mean(axis=1)
    half = 1.96 * per_path.std(axis=1, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros(len(levels))
    dts = np.array([(spec.T - t) / n for n in levels])
    if np.all(errors == 0):
        slope, ci = math.nan, (math.nan, math.nan)
    else:
        slope = _fit_slope(dts, errors)
        rng = np.random.default_rng(seed)
        boots = []
        for _ in range(n_bootstrap):
            pick = rng.integers(0, n_paths, n_paths)
            e = per_path[:, pick].mean(axis=1)
            b = _fit_slope(dts, e)
            if math.isfinite(b):
                boots.append(b)
        ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))) if boots else (math.nan, math.nan)
    return ConvergenceReport(
        step_sizes=dts.tolist(),
        n_steps=levels,
        errors=errors.tolist(),
        error_halfwidths=np.asarray(half).tolist(),
        slope=slope,
        slope_ci=ci,
        reference_steps=fine,
        n_paths=int(n_paths),
        seed=int(seed),
    )
