"""Polynomial weight P(x) = 1 + |x|^(2q) and its derivatives in closed form.

q = 0 is the unweighted case P = 1.
"""

import numpy as np


def _points(X):
    X = np.asarray(X, dtype=np.float64)
    return X[None, :] if X.ndim == 1 else X


def _check_q(q):
    if int(q) != q or q < 0:
        raise ValueError(f"weight exponent must be a nonnegative integer, got {q!r}")
    return int(q)


def weight_values(q, X):
    q = _check_q(q)
    X = _points(X)
    if q == 0:
        return np.ones(X.shape[0])
    s = np.einsum("ij,ij->i", X, X)
    return 1.0 + s**q


def weight_gradient(q, X):
    q = _check_q(q)
    X = _points(X)
    if q == 0:
        return np.zeros_like(X)
    s = np.einsum("ij,ij->i", X, X)
    return (2.0 * q * s ** (q - 1))[:, None] * X


def weight_hessian(q, X):
    q = _check_q(q)
    X = _points(X)
    n, d = X.shape
    H = np.zeros((n, d, d))
    if q == 0:
        return H
    s = np.einsum("ij,ij->i", X, X)
    H += (2.0 * q * s ** (q - 1))[:, None, None] * np.eye(d)
    if q >= 2:
        H += (4.0 * q * (q - 1) * s ** (q - 2))[:, None, None] * np.einsum("ni,nj->nij", X, X)
    return H


def weight_third(q, X):
    q = _check_q(q)
    X = _points(X)
    n, d = X.shape
    D = np.zeros((n, d, d, d))
    if q <= 1:
        return D
    s = np.einsum("ij,ij->i", X, X)
    eye = np.eye(d)
    sym = (
        np.einsum("ij,nk->nijk", eye, X)
        + np.einsum("ik,nj->nijk", eye, X)
        + np.einsum("jk,ni->nijk", eye, X)
    )
    D += (4.0 * q * (q - 1) * s ** (q - 2))[:, None, None, None] * sym
    if q >= 3:
        D += (8.0 * q * (q - 1) * (q - 2) * s ** (q - 3))[:, None, None, None] * np.einsum(
            "ni,nj,nk->nijk", X, X, X
        )
    return D
