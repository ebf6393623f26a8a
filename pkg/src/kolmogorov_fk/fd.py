"""Theta-scheme finite differences for the Cauchy-Dirichlet problem on a box.

The scheme marches backward from ``t2`` to ``t1``::

    (I - theta dt M^n) u^n = u^{n+1} + (1 - theta) dt M^{n+1} u^{n+1}
                             + dt (theta fbar^n + (1 - theta) fbar^{n+1})

with ``M u = sum a_ij D_ij u + sum b_i D_i u - cbar u`` by central differences.
The reaction and source are exponentially fitted, ``cbar = rho c`` and
``fbar = rho f``, so a spatially constant solution decays by exactly
``exp(-c dt)`` per step.
"""

from __future__ import annotations

import itertools
import math
import warnings

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu

from . import kernels
from .grid import Box, Field, read_field_csv, write_field_csv  # noqa: F401  (re-exported)
from .problem.spec import ProblemSpec
from .report import BoundCheck


ROUNDING = 1e-10


class FDSolveError(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class EllipticityError(ValueError):
    pass


class PecletWarning(RuntimeWarning):
    pass


def fitting_factor(c, dt, theta):
    """``rho`` with ``(1 - (1-theta) dt rho c) / (1 + theta dt rho c) = exp(-c dt)``."""
    x = np.asarray(c, dtype=np.float64) * dt
    small = np.abs(x) < 1e-12
    xs = np.where(small, 1.0, x)
    rho = -np.expm1(-xs) / (xs * ((1.0 - theta) + theta * np.exp(-xs)))
    return np.where(small, 1.0, rho)


def _strides(counts):
    out = []
    acc = 1
    for n in reversed(counts):
        out.append(acc)
        acc *= n
    return tuple(reversed(out))


class _Coefficients:
    def __init__(self, spec, box, t, dt, theta, fitted):
        X = box.points()
        self.a = spec.a(t, X)
        self.b = spec.b(t, X)
        c = spec.c(t, X)
        f = spec.f(t, X)
        rho = fitting_factor(c, dt, theta) if fitted else 1.0
        self.c = c
        self.cbar = rho * c
        self.fbar = rho * f

    def same_operator(self, other):
        return (
            other is not None
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.cbar, other.cbar)
        )


def check_ellipticity(spec: ProblemSpec, box: Box, n_times=3):
    X = box.points()
    worst = math.inf
    for t in np.linspace(box.t1, box.t2, n_times):
        worst = min(worst, float(np.linalg.eigvalsh(spec.a(float(t), X))[:, 0].min()))
    if not worst > 0:
        raise EllipticityError(f"diffusion is not elliptic on the box (min eigenvalue of a = {worst:.3g})")
    return worst


def peclet_number(coef: _Coefficients, box: Box):
    h = np.asarray(box.spacing)
    diag = np.einsum("nii->ni", coef.a)
    with np.errstate(divide="ignore", invalid="ignore"):
        pe = h[None, :] * np.abs(coef.b) / (2.0 * diag)
    return float(np.nanmax(pe))


def assemble_operator(coef: _Coefficients, box: Box):
    """Sparse ``M`` on all nodes; boundary rows are empty."""
    counts = box.counts
    d = box.d
    h = box.spacing
    strides = _strides(counts)
    N = int(np.prod(counts))
    interior = ~box.boundary_mask().reshape(-1)
    p = np.flatnonzero(interior)
    a = coef.a[p]
    b = coef.b[p]
    rows, cols, vals = [p], [p], [-coef.cbar[p]]
    for i in range(d):
        s = strides[i]
        diff = a[:, i, i] / h[i] ** 2
        conv = b[:, i] / (2.0 * h[i])
        rows += [p, p, p]
        cols += [p, p + s, p - s]
        vals += [-2.0 * diff, diff + conv, diff - conv]
    for i in range(d):
        for j in range(i + 1, d):
            w = 2.0 * a[:, i, j] / (4.0 * h[i] * h[j])
            si, sj = strides[i], strides[j]
            for sgn_i, sgn_j, sign in ((1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)):
                rows.append(p)
                cols.append(p + sgn_i * si + sgn_j * sj)
                vals.append(sign * w)
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    return L


def _tridiagonal(coef: _Coefficients, box: Box):
    n = box.counts[0]
    h = box.spacing[0]
    diff = coef.a[:, 0, 0] / h**2
    conv = coef.b[:, 0] / (2.0 * h)
    lower = diff - conv
    diag = -2.0 * diff - coef.cbar
    upper = diff + conv
    for arr in (lower, diag, upper):
        arr[0] = 0.0
        arr[n - 1] = 0.0
    return lower, diag, upper


def _apply_tridiagonal(lower, diag, upper, u):
    out = diag * u
    out[1:] += lower[1:] * u[:-1]
    out[:-1] += upper[:-1] * u[1:]
    return out


def _boundary_values(boundary, box, t, k, X, mask):
    if callable(boundary):
        return np.asarray(boundary(float(t), X[mask]), dtype=np.float64).reshape(-1)
    arr = np.asarray(boundary.values if isinstance(boundary, Field) else boundary, dtype=np.float64)
    return arr[k].reshape(-1)[mask]


def solve_dirichlet(spec: ProblemSpec, box: Box, terminal=None, boundary=None, theta=0.5, fitted=True, check=True) -> Field:
    """Solve backward on ``box`` with terminal slice ``terminal`` and lateral data ``boundary``.

    ``terminal`` is an array of shape ``box.counts`` (default: ``h`` at the nodes).
    ``boundary`` is either a callable ``g(t, X)`` or an array/Field of shape ``box.shape``
    whose boundary entries are used.
    """
    if box.d != spec.d:
        raise ValueError("box dimension differs from the problem dimension")
    if box.d > 3:
        raise ValueError("the finite-difference solver supports d <= 3")
    if not 0.5 <= theta <= 1.0:
        raise ValueError("theta must lie in [1/2, 1]")
    if boundary is None:
        raise ValueError("lateral boundary data is required")
    if check:
        check_ellipticity(spec, box)
    X = box.points()
    mask = box.boundary_mask().reshape(-1)
    times = box.times()
    dt = box.dt
    n_t = box.n_t
    U = np.empty(box.shape)
    if terminal is None:
        u = spec.h(X)
    else:
        u = np.asarray(terminal, dtype=np.float64).reshape(-1).copy()
    u[mask] = _boundary_values(boundary, box, times[n_t], n_t, X, mask)
    U[n_t] = u.reshape(box.counts)

    one_d = box.d == 1
    coef_next = _Coefficients(spec, box, float(times[n_t]), dt, theta, fitted)
    pe = peclet_number(coef_next, box)
    L_next = None if one_d else assemble_operator(coef_next, box)
    tri_next = _tridiagonal(coef_next, box) if one_d else None
    lu, lu_coef = None, None
    for k in range(n_t - 1, -1, -1):
        coef = _Coefficients(spec, box, float(times[k]), dt, theta, fitted)
        pe = max(pe, peclet_number(coef, box))
        # explicit part with the operator at t_{k+1}
        if one_d:
            Mu = _apply_tridiagonal(*tri_next, u)
        else:
            Mu = L_next @ u
        rhs = u + (1.0 - theta) * dt * Mu + dt * (theta * coef.fbar + (1.0 - theta) * coef_next.fbar)
        rhs[mask] = _boundary_values(boundary, box, times[k], k, X, mask)
        if one_d:
            lo, di, up = _tridiagonal(coef, box) if not coef.same_operator(coef_next) else tri_next
            A_lo = -theta * dt * lo
            A_di = 1.0 - theta * dt * di
            A_up = -theta * dt * up
            A_di[0] = A_di[-1] = 1.0
            try:
                u = kernels.thomas(A_lo, A_di, A_up, rhs)
            except ZeroDivisionError as exc:
                raise FDSolveError(f"singular tridiagonal system at time step {k}: {exc}", k) from exc
            tri_next = (lo, di, up)
        else:
            L = L_next if coef.same_operator(coef_next) else assemble_operator(coef, box)
            if lu is None or not coef.same_operator(lu_coef):
                A = (sp.identity(L.shape[0], format="csr") - theta * dt * L).tocsc()
                try:
                    lu = splu(A)
                except RuntimeError as exc:
                    raise FDSolveError(f"singular system at time step {k}: {exc}", k) from exc
                lu_coef = coef
            u = lu.solve(rhs)
            L_next = L
        if not np.all(np.isfinite(u)):
            raise FDSolveError(f"non-finite solution at time step {k}", k)
        coef_next = coef
        U[k] = u.reshape(box.counts)
    if pe > 1.0:
        warnings.warn(f"mesh Peclet number {pe:.3g} exceeds 1; the discrete maximum principle may fail", PecletWarning)
    return Field(box, U, "FD", None, {"theta": theta, "fitted": fitted, "peclet": pe})


# ---------------------------------------------------------------- derivatives and residual


def _diff_axis(arr, axis, order, h):
    """Central difference of ``order`` along ``axis``; shrinks that axis by 1 (orders 1, 2) or 2 (order 3)."""
    n = arr.shape[axis]

    def sl(a, b):
        idx = [slice(None)] * arr.ndim
        idx[axis] = slice(a, n + b if n + b != n else None)
        return arr[tuple(idx)]

    if order == 1:
        return (sl(2, 0) - sl(0, -2)) / (2.0 * h)
    if order == 2:
        return (sl(2, 0) - 2.0 * sl(1, -1) + sl(0, -2)) / (h * h)
    if order == 3:
        return (sl(4, 0) - 2.0 * sl(3, -1) + 2.0 * sl(1, -3) - sl(0, -4)) / (2.0 * h**3)
    raise ValueError("orders 1 to 3 only")


def _reach(order):
    return 0 if order == 0 else (1 if order <= 2 else 2)


def multi_indices(d, order):
    """All alpha with |alpha| = order as per-axis counts."""
    out = []
    for combo in itertools.combinations_with_replacement(range(d), order):
        alpha = [0] * d
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return out


def spatial_derivative(values, spacing, alpha, margin):
    """``D^alpha`` of a spatial array by central differences, cropped to ``margin`` nodes from every side.

    ``values`` may carry leading (e.g. time) axes; spatial axes are the last ``len(alpha)``.
    """
    d = len(alpha)
    lead = values.ndim - d
    out = values
    for i, k in enumerate(alpha):
        if k:
            if _reach(k) > margin:
                raise ValueError(f"margin {margin} too small for order {k}")
            out = _diff_axis(out, lead + i, k, spacing[i])
    idx = [slice(None)] * lead
    for i, k in enumerate(alpha):
        r = margin - _reach(k)
        n = out.shape[lead + i]
        idx.append(slice(r, n - r))
    return out[tuple(idx)]


def residual(spec: ProblemSpec, fld: Field) -> Field:
    """``D_t u + sum a_ij D_ij u + sum b_i D_i u - c u + f`` on interior nodes."""
    box = fld.box
    if box.n_t + 1 < 3 or any(n < 3 for n in box.counts):
        raise ValueError("residual needs at least 3 time slices and 3 nodes per axis")
    d = box.d
    times = box.times()
    U = fld.values
    inner = box.shrink(1)
    X = inner.points()
    h = box.spacing
    Ut = np.gradient(U, times, axis=0, edge_order=2)
    crop = (slice(None),) + box.interior_slices(1)
    out = np.empty(inner.shape)
    first = {i: spatial_derivative(U, h, tuple(1 if j == i else 0 for j in range(d)), 1) for i in range(d)}
    second = {}
    for i in range(d):
        for j in range(i, d):
            alpha = [0] * d
            alpha[i] += 1
            alpha[j] += 1
            second[(i, j)] = spatial_derivative(U, h, tuple(alpha), 1)
    for k, t in enumerate(times):
        t = float(t)
        a = spec.a(t, X)
        b = spec.b(t, X)
        c = spec.c(t, X)
        f = spec.f(t, X)
        u = U[crop][k].reshape(-1)
        r = Ut[crop][k].reshape(-1) - c * u + f
        for i in range(d):
            r = r + b[:, i] * first[i][k].reshape(-1)
            for j in range(i, d):
                w = a[:, i, j] if i == j else 2.0 * a[:, i, j]
                r = r + w * second[(i, j)][k].reshape(-1)
        out[k] = r.reshape(inner.counts)
    return Field(inner, out, "residual")


# ---------------------------------------------------------------- localized cross-check


def boundary_from_mc(spec, box, n_paths, n_steps, seed, antithetic=True, n_ladder=11, source_spec=None, divide_by_weight=0):
    """MC values at the lateral boundary on a coarse time ladder, spline-interpolated to every slice.

    ``n_ladder=None`` estimates every slice directly.
    Returns ``(values, stderr)`` arrays of shape ``box.shape`` (interior entries are zero).
    ``source_spec`` is the problem the MC runs on (default ``spec``); when
    ``divide_by_weight`` is positive the values are divided by ``P`` of that order.
    """
    from . import fk
    from .weights import weight_values

    mc_spec = source_spec if source_spec is not None else spec
    X = box.points()
    mask = box.boundary_mask().reshape(-1)
    bx = X[mask]
    times = box.times()
    if n_ladder is None or n_ladder >= len(times):
        ladder = times
    else:
        ladder = np.linspace(box.t1, box.t2, n_ladder)
        ladder[-1] = box.t2
    n_ladder = len(ladder)
    n_space = X.shape[0]
    node_index = np.flatnonzero(mask)
    V = np.empty((n_ladder, bx.shape[0]))
    E = np.empty((n_ladder, bx.shape[0]))
    for k, t in enumerate(ladder):
        ids = 10_000_000 + k * n_space + node_index
        V[k], E[k] = fk.estimate_nodes(mc_spec, np.full(bx.shape[0], t), bx, ids, n_paths, n_steps, seed, antithetic, float(box.t1))
    if divide_by_weight:
        P = weight_values(divide_by_weight, bx)
        V = V / P
        E = E / P
    vals = np.zeros((len(times), n_space))
    errs = np.zeros((len(times), n_space))
    if ladder is times:
        vals[:, mask], errs[:, mask] = V, E
    else:
        vals[:, mask] = CubicSpline(ladder, V, axis=0)(times)
        errs[:, mask] = CubicSpline(ladder, E, axis=0)(times)
    return vals.reshape(box.shape), np.abs(errs).reshape(box.shape)


def propagated_stderr(spec, box, boundary_err, theta=0.5):
    """Interior effect of boundary noise: the homogeneous solve with |boundary stderr| as data."""
    from .problem.spec import with_data
    from .problem.fields import constant

    quiet = with_data(spec, terminal=constant(0.0), source=constant(0.0))
    term = np.zeros(box.counts)
    term[box.boundary_mask()] = boundary_err[-1][box.boundary_mask()]
    return np.abs(solve_dirichlet(quiet, box, term, boundary_err, theta, check=False).values)


def localized_cross_check(
    spec: ProblemSpec,
    box: Box,
    n_paths=100_000,
    n_steps=20,
    seed=0,
    theta=0.5,
    n_check=5,
    allowance=1e-3,
    fd_spec=None,
    antithetic=True,
    n_ladder=11,
) -> BoundCheck:
    """Compare the FD solution driven by MC boundary data with independent interior MC values.

    ``fd_spec`` (default ``spec``) is the problem handed to the FD solver; passing a
    perturbed copy is how the negative control is built.
    """
    from . import fk

    fd_problem = fd_spec if fd_spec is not None else spec
    bvals, berrs = boundary_from_mc(spec, box, n_paths, n_steps, seed, antithetic, n_ladder)
    X = box.points()
    terminal = spec.h(X)
    fld = solve_dirichlet(fd_problem, box, terminal, bvals, theta)
    fd_err = propagated_stderr(fd_problem, box, berrs, theta)
    # interior comparison nodes on the first slice, evenly spread
    interior = np.flatnonzero(~box.boundary_mask().reshape(-1))
    pick = interior[np.unique(np.linspace(0, len(interior) - 1, n_check).round().astype(int))]
    ids = 20_000_000 + pick
    mc_vals, mc_errs = fk.estimate_nodes(spec, np.full(len(pick), box.t1), X[pick], ids, n_paths, n_steps, seed + 1, antithetic)
    fd_vals = fld.values[0].reshape(-1)[pick]
    fd_errs = fd_err[0].reshape(-1)[pick]
    disc = np.abs(fd_vals - mc_vals)
    allowed = 3.0 * np.sqrt(mc_errs**2 + fd_errs**2) + allowance
    worst = int(np.argmax(disc - allowed))
    return BoundCheck(
        tag="localization",
        lhs=float(disc[worst]),
        rhs=float(allowed[worst]),
        tolerance=ROUNDING,
        inputs={
            "problem": spec.describe(),
            "box": box.describe(),
            "n_paths": n_paths,
            "n_ladder": n_ladder,
            "n_steps": n_steps,
            "seed": seed,
            "theta": theta,
            "antithetic": antithetic,
            "fd_problem_differs": fd_spec is not None,
        },
        detail={
            "points": X[pick].tolist(),
            "fd": fd_vals.tolist(),
            "mc": mc_vals.tolist(),
            "mc_stderr": mc_errs.tolist(),
            "fd_stderr": fd_errs.tolist(),
            "max_discrepancy": float(disc.max()),
        },
    )
