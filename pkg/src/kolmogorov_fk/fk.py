"""Monte Carlo estimates of the Feynman-Kac value and its spatial gradient."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import Box, Field
from .problem.spec import ProblemSpec
from .rng import derive_seed
from .sde import PathBatch, check_variation, cumulative_trapezoid, map_chunks

QUADRATURES = ("trapezoid", "left")


@dataclass
class Estimate:
    mean: object
    stderr: object
    n_paths: int
    n_steps: int
    seed: int
    kind: str = "value"
    antithetic: bool = False
    t: Optional[float] = None
    x: Optional[list] = None
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        conv = lambda v: np.asarray(v).tolist()  # noqa: E731
        return {
            "kind": self.kind,
            "mean": conv(self.mean),
            "stderr": conv(self.stderr),
            "n_paths": self.n_paths,
            "n_steps": self.n_steps,
            "seed": self.seed,
            "antithetic": self.antithetic,
            "t": self.t,
            "x": self.x,
        }


def _weights(n_steps, dt, quadrature):
    w = np.full(n_steps + 1, dt)
    if quadrature == "trapezoid":
        w[0] = w[-1] = 0.5 * dt
    elif quadrature == "left":
        w[-1] = 0.0
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}; use one of {QUADRATURES}")
    return w


def _discount(batch, spec, quadrature):
    if quadrature == "trapezoid":
        return batch.discount_integral
    dt = batch.dt
    X = batch.states
    c = np.stack([spec.c(float(s), X[:, k]) for k, s in enumerate(batch.t_grid)], axis=1)
    out = np.zeros(c.shape)
    for k in range(c.shape[1] - 1):
        out[:, k + 1] = out[:, k] + dt * c[:, k]
    return out


def discounted_payoff(batch: PathBatch, spec: ProblemSpec, quadrature="trapezoid"):
    """Per-path ``h(X_T) e^{-I_T} + sum_k w_k f(t_k, X_k) e^{-I_k}``."""
    X = batch.states
    N = batch.n_steps
    I = _discount(batch, spec, quadrature)
    E = np.exp(-I)
    out = spec.h(X[:, N]) * E[:, N]
    if spec.source.const != 0.0:
        w = _weights(N, batch.dt, quadrature)
        for k in range(N + 1):
            if w[k] == 0.0:
                continue
            out = out + w[k] * spec.f(float(batch.t_grid[k]), X[:, k]) * E[:, k]
    return out


def _summarise(samples, antithetic):
    n = samples.shape[0]
    first = samples[0]
    if np.all(samples == first):
        return np.array(first, dtype=np.float64), np.zeros_like(first, dtype=np.float64)
    if antithetic:
        units = 0.5 * (samples[0::2] + samples[1::2])
    else:
        units = samples
    k = units.shape[0]
    mean = samples.mean(axis=0)
    if k < 2:
        return mean, np.full_like(mean, np.nan, dtype=np.float64)
    return mean, units.std(axis=0, ddof=1) / math.sqrt(k)


def estimate_value(
    spec: ProblemSpec,
    t,
    x,
    n_paths,
    n_steps,
    seed=0,
    antithetic=False,
    quadrature="trapezoid",
    n_workers=1,
    chunk=None,
) -> Estimate:
    """Sample mean of the discounted payoff with its standard error."""
    parts = map_chunks(
        spec, t, x, n_paths, n_steps, seed, antithetic, False,
        lambda b: discounted_payoff(b, spec, quadrature), n_workers, chunk,
    )
    samples = np.concatenate(parts)
    mean, err = _summarise(samples, antithetic)
    return Estimate(float(mean), float(err), int(n_paths), int(n_steps), int(seed), "value", bool(antithetic),
                    float(t), np.atleast_1d(np.asarray(x, dtype=float)).tolist())


def payoff_samples(spec, t, x, n_paths, n_steps, seed=0, antithetic=False, quadrature="trapezoid", chunk=None):
    parts = map_chunks(
        spec, t, x, n_paths, n_steps, seed, antithetic, False,
        lambda b: discounted_payoff(b, spec, quadrature), 1, chunk,
    )
    return np.concatenate(parts)


def pathwise_gradient(batch: PathBatch, spec: ProblemSpec):
    """Per-path gradient samples, shape (n, d), from the four-term formula.

    Terms: grad h^T J_T e^{-I_T}; -h e^{-I_T} G_T; sum w_k grad f^T J_k e^{-I_k};
    -sum w_k f e^{-I_k} G_k, where ``G_k`` is the trapezoid integral of grad c^T J.
    """
    X, J = batch.states, batch.variation
    if J is None:
        raise ValueError("batch carries no first-variation matrices")
    N = batch.n_steps
    dt = batch.dt
    E = np.exp(-batch.discount_integral)
    n, _, d = X.shape
    times = batch.t_grid
    # g[:, k, l] = sum_i D_i c J_il
    g = np.empty((n, N + 1, d))
    for k in range(N + 1):
        g[:, k] = np.einsum("ni,nil->nl", spec.grad_c(float(times[k]), X[:, k]), J[:, k])
    G = np.stack([cumulative_trapezoid(g[:, :, l], dt) for l in range(d)], axis=2)
    hT = spec.h(X[:, N])
    out = np.einsum("ni,nil->nl", spec.grad_h(X[:, N]), J[:, N]) * E[:, N, None]
    out = out - (hT * E[:, N])[:, None] * G[:, N]
    if spec.source.const != 0.0:
        w = _weights(N, dt, "trapezoid")
        for k in range(N + 1):
            tk = float(times[k])
            gf = np.einsum("ni,nil->nl", spec.grad_f(tk, X[:, k]), J[:, k])
            fk = spec.f(tk, X[:, k])
            out = out + w[k] * (gf - fk[:, None] * G[:, k]) * E[:, k, None]
    return out


def estimate_gradient(spec: ProblemSpec, t, x, n_paths, n_steps, seed=0, antithetic=False, n_workers=1, chunk=None) -> Estimate:
    """Pathwise estimate of ``D_x u(t, x)`` using the first-variation process."""

    def reduce(b):
        return pathwise_gradient(b, spec), check_variation(b)

    parts = map_chunks(spec, t, x, n_paths, n_steps, seed, antithetic, True, reduce, n_workers, chunk)
    samples = np.concatenate([p[0] for p in parts])
    mean, err = _summarise(samples, antithetic)
    est = Estimate(mean, err, int(n_paths), int(n_steps), int(seed), "gradient", bool(antithetic),
                   float(t), np.atleast_1d(np.asarray(x, dtype=float)).tolist())
    est.meta["min_det_variation"] = min(p[1] for p in parts)
    return est


# ---------------------------------------------------------------- grids


def node_steps(n_steps, T, t, t_first):
    """Steps for a node at time ``t`` so that the step size matches the earliest slice."""
    if t_first >= T:
        return max(1, int(n_steps))
    return max(1, int(round(n_steps * (T - t) / (T - t_first))))


def estimate_nodes(spec, times, points, node_ids, n_paths, n_steps, seed=0, antithetic=False, t_first=None, n_workers=1):
    """Nodewise values and stderrs; node ``i`` uses seed ``derive_seed(seed, node_ids[i])``."""
    times = np.asarray(times, dtype=np.float64)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if t_first is None:
        t_first = float(times.min())
    vals = np.empty(len(times))
    errs = np.empty(len(times))
    for i, (t, x, nid) in enumerate(zip(times, points, node_ids)):
        if t >= spec.T:
            vals[i] = spec.h(x[None, :])[0]
            errs[i] = 0.0
            continue
        est = estimate_value(
            spec, float(t), x, n_paths, node_steps(n_steps, spec.T, t, t_first),
            derive_seed(seed, int(nid)), antithetic, n_workers=n_workers,
        )
        vals[i] = est.mean
        errs[i] = est.stderr
    return vals, errs


def estimate_on_grid(spec: ProblemSpec, box: Box, n_paths, n_steps, seed=0, antithetic=False, n_workers=1) -> Field:
    """Field of MC values on every node of ``box`` (stderr in ``Field.stderr``)."""
    if box.d != spec.d:
        raise ValueError("box dimension differs from the problem dimension")
    if box.t2 > spec.T + 1e-12:
        raise ValueError("grid extends beyond the horizon")
    times = box.times()
    pts = box.points()
    n_space = pts.shape[0]
    T_all = np.repeat(times, n_space)
    X_all = np.tile(pts, (len(times), 1))
    ids = np.arange(len(T_all))
    vals, errs = estimate_nodes(spec, T_all, X_all, ids, n_paths, n_steps, seed, antithetic, float(times[0]), n_workers)
    return Field(box, vals.reshape(box.shape), "MC", errs.reshape(box.shape),
                 {"n_paths": n_paths, "n_steps": n_steps, "seed": seed, "antithetic": antithetic})
