"""Rectangular space-time boxes and the fields that live on them."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Box:
    """``[lower, upper]`` in R^d with ``counts[i]`` nodes per axis, times ``[t1, t2]`` in ``n_t`` steps."""

    lower: tuple
    upper: tuple
    counts: tuple
    t1: float
    t2: float
    n_t: int

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        n = tuple(int(v) for v in np.atleast_1d(self.counts))
        if len(n) == 1 and len(lo) > 1:
            n = n * len(lo)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "counts", n)
        if not (len(lo) == len(hi) == len(n)):
            raise ValueError("lower, upper and counts must have the same length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("need lower < upper on every axis")
        if any(c < 3 for c in n):
            raise ValueError("need at least 3 nodes per axis")
        if not self.t1 < self.t2:
            raise ValueError("need t1 < t2")
        if self.n_t < 1:
            raise ValueError("need at least one time step")

    @classmethod
    def cube(cls, d, half_width, count, t1, t2, n_t):
        return cls((-half_width,) * d, (half_width,) * d, (count,) * d, t1, t2, n_t)

    @property
    def d(self):
        return len(self.counts)

    @property
    def shape(self):
        return (self.n_t + 1,) + self.counts

    @property
    def spacing(self):
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.lower, self.upper, self.counts))

    @property
    def dt(self):
        return (self.t2 - self.t1) / self.n_t

    def axes(self):
        return [np.linspace(a, b, n) for a, b, n in zip(self.lower, self.upper, self.counts)]

    def times(self):
        ts = np.linspace(self.t1, self.t2, self.n_t + 1)
        ts[-1] = self.t2
        return ts

    def points(self):
        """All spatial nodes, shape (prod(counts), d), C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def boundary_mask(self):
        mask = np.zeros(self.counts, dtype=bool)
        for ax in range(self.d):
            idx = [slice(None)] * self.d
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return mask

    def interior_slices(self, margin=1):
        return tuple(slice(margin, n - margin) for n in self.counts)

    def shrink(self, margin):
        """Sub-box dropping ``margin`` nodes on each side (same spacing)."""
        h = self.spacing
        return Box(
            tuple(a + margin * s for a, s in zip(self.lower, h)),
            tuple(b - margin * s for b, s in zip(self.upper, h)),
            tuple(n - 2 * margin for n in self.counts),
            self.t1,
            self.t2,
            self.n_t,
        )

    def with_times(self, t1, t2, n_t):
        return Box(self.lower, self.upper, self.counts, t1, t2, n_t)

    def describe(self):
        return {"lower": list(self.lower), "upper": list(self.upper), "counts": list(self.counts), "t1": self.t1, "t2": self.t2, "n_t": self.n_t}


@dataclass
class Field:
    """Values on ``box`` indexed ``values[time_slice, i1, ..., id]``."""

    box: Box
    values: np.ndarray
    source: str = "FD"
    stderr: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.box.shape:
            raise ValueError(f"values have shape {self.values.shape}, box needs {self.box.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=np.float64)
            if self.stderr.shape != self.values.shape:
                raise ValueError("stderr shape differs from values shape")

    def slice_at(self, k):
        return self.values[k]

    def interior(self, margin=1):
        return self.values[(slice(None),) + self.box.interior_slices(margin)]

    def restrict(self, margin):
        sl = (slice(None),) + self.box.interior_slices(margin)
        err = None if self.stderr is None else self.stderr[sl]
        return Field(self.box.shrink(margin), self.values[sl].copy(), self.source, err, dict(self.meta))


def write_field_csv(fld: Field, path, header_source=None):
    """CSV with columns t, x1..xd, value, stderr; an optional ``# source:`` line first.

    ``path`` may be a file name or an open text file.
    """
    box = fld.box
    pts = box.points()
    times = box.times()
    err = fld.stderr
    src = header_source if header_source is not None else fld.source
    if hasattr(path, "write"):
        _write_rows(path, fld, pts, times, err, src)
    else:
        with open(path, "w", newline="") as fh:
            _write_rows(fh, fld, pts, times, err, src)


def _write_rows(fh, fld, pts, times, err, src):
    if src:
        fh.write(f"# source: {src}\n")
    w = csv.writer(fh)
    w.writerow(["t"] + [f"x{i + 1}" for i in range(fld.box.d)] + ["value", "stderr"])
    for k, t in enumerate(times):
        vals = fld.values[k].reshape(-1)
        errs = err[k].reshape(-1) if err is not None else np.zeros_like(vals)
        for p, v, e in zip(pts, vals, errs):
            w.writerow(["%.17g" % t] + ["%.17g" % c for c in p] + ["%.17g" % v, "%.17g" % e])


def read_field_csv(path) -> Field:
    source = ""
    rows = []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            if line[1:].strip().startswith("source:"):
                source = line.split(":", 1)[1].strip()
            continue
        body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    d = len(header) - 3
    for r in reader:
        rows.append([float(v) for v in r])
    data = np.array(rows)
    times = np.unique(data[:, 0])
    axes = [np.unique(data[:, 1 + i]) for i in range(d)]
    box = Box(
        tuple(a[0] for a in axes),
        tuple(a[-1] for a in axes),
        tuple(len(a) for a in axes),
        float(times[0]),
        float(times[-1]),
        len(times) - 1,
    )
    values = data[:, 1 + d].reshape(box.shape)
    stderr = data[:, 2 + d].reshape(box.shape)
    return Field(box, values, source or "CSV", stderr)
