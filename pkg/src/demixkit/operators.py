"""Linear maps used as dictionaries and measurement operators.

Each operator knows its input and output shapes and provides ``apply`` and
``adjoint``. ``Dct`` and ``RandomRotation`` are orthogonal, which lets a
gauge composed with them keep an exact proximal map (see ``solvers``).
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "LinearOp",
    "Identity",
    "Dense",
    "Dct",
    "RandomRotation",
    "SubsampleRows",
    "ConvLift",
    "dct_matrix",
    "random_rotation",
    "haar_orthogonal",
    "conv_lift_apply",
    "conv_lift_adjoint",
    "operator_norm",
]


class LinearOp:
    """Base class: a linear map from ``in_shape`` arrays to ``out_shape`` arrays."""

    is_orthogonal = False

    def __init__(self, in_shape, out_shape):
        self.in_shape = _as_shape(in_shape)
        self.out_shape = _as_shape(out_shape)

    def apply(self, x):
        x = self._check(x, self.in_shape, "input")
        return self._apply(x)

    def adjoint(self, y):
        y = self._check(y, self.out_shape, "output")
        return self._adjoint(y)

    def __call__(self, x):
        return self.apply(x)

    def _check(self, a, shape, side):
        a = np.asarray(a, dtype=float)
        if a.shape != shape:
            raise ValueError(
                f"{type(self).__name__} expects {side} shape {shape}, got {a.shape}"
            )
        return a

    def _apply(self, x):
        raise NotImplementedError

    def _adjoint(self, y):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.in_shape} -> {self.out_shape})"


def _as_shape(shape):
    if np.isscalar(shape):
        return (int(shape),)
    return tuple(int(n) for n in shape)


class Identity(LinearOp):
    is_orthogonal = True

    def __init__(self, shape):
        super().__init__(shape, shape)

    def _apply(self, x):
        return x.copy()

    def _adjoint(self, y):
        return y.copy()


class Dense(LinearOp):
    """Matrix-vector product with a stored (row-major) matrix.

    When ``in_shape``/``out_shape`` are given the map acts on flattened
    arrays of those shapes.
    """

    def __init__(self, matrix, in_shape=None, out_shape=None, orthogonal=False):
        matrix = np.ascontiguousarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("Dense operator needs a 2-D matrix")
        in_shape = (matrix.shape[1],) if in_shape is None else in_shape
        out_shape = (matrix.shape[0],) if out_shape is None else out_shape
        super().__init__(in_shape, out_shape)
        if int(np.prod(self.in_shape)) != matrix.shape[1] or int(
            np.prod(self.out_shape)
        ) != matrix.shape[0]:
            raise ValueError("matrix size does not match the declared shapes")
        self.matrix = matrix
        self.is_orthogonal = bool(orthogonal)

    def _apply(self, x):
        return (self.matrix @ x.ravel()).reshape(self.out_shape)

    def _adjoint(self, y):
        return (self.matrix.T @ y.ravel()).reshape(self.in_shape)


def dct_matrix(d):
    """Orthonormal DCT-II matrix ``D[k, n] = c_k sqrt(2/d) cos(pi (2n+1) k / 2d)``."""
    if d < 1:
        raise ValueError("d must be positive")
    k = np.arange(d)[:, None]
    n = np.arange(d)[None, :]
    mat = np.sqrt(2.0 / d) * np.cos(np.pi * (2 * n + 1) * k / (2 * d))
    mat[0] /= np.sqrt(2.0)
    return mat


class Dct(Dense):
    """Orthonormal DCT-II; ``apply`` maps a signal to its cosine coefficients."""

    def __init__(self, d):
        super().__init__(dct_matrix(d), orthogonal=True)
        self.d = int(d)

    def __repr__(self):
        return f"Dct({self.d})"


def haar_orthogonal(d, rng):
    """Draw a Haar-distributed ``d x d`` orthogonal matrix from ``rng``.

    QR of a Gaussian matrix, with the columns of Q flipped so that R has a
    positive diagonal; without the flip the distribution is not Haar.
    """
    gauss = rng.standard_normal((d, d))
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


class RandomRotation(Dense):
    """Haar-random orthogonal matrix, reproducible from ``(d, seed)``."""

    def __init__(self, d, seed):
        if d < 1:
            raise ValueError(f"rotation dimension must be >= 1, got {d}")
        rng = np.random.Generator(np.random.Philox(int(seed)))
        super().__init__(haar_orthogonal(int(d), rng), orthogonal=True)
        self.d = int(d)
        self.seed = int(seed)

    def __repr__(self):
        return f"RandomRotation({self.d}, seed={self.seed})"


def random_rotation(d, seed):
    return RandomRotation(d, seed)


class SubsampleRows(LinearOp):
    """Keep the coordinates (or matrix rows) selected by a boolean mask."""

    def __init__(self, mask, in_shape=None):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 1:
            raise ValueError("mask must be one-dimensional")
        in_shape = (mask.size,) if in_shape is None else _as_shape(in_shape)
        if in_shape[0] != mask.size:
            raise ValueError("mask length must equal the leading input dimension")
        out_shape = (int(mask.sum()),) + tuple(in_shape[1:])
        super().__init__(in_shape, out_shape)
        self.mask = mask

    def _apply(self, x):
        return x[self.mask].copy()

    def _adjoint(self, y):
        out = np.zeros(self.in_shape)
        out[self.mask] = y
        return out


def conv_lift_apply(X):
    """Sum the anti-diagonals of ``X``: ``z_k = sum_{i+j=k} X[i, j]``.

    For ``X = outer(x, y)`` this is the linear convolution ``x * y``.
    """
    X = np.asarray(X, dtype=float)
    m, d = X.shape
    z = np.zeros(m + d - 1)
    for i in range(m):
        z[i : i + d] += X[i]
    return z


def conv_lift_adjoint(z, m, d):
    """Adjoint of :func:`conv_lift_apply`: ``X[i, j] = z[i + j]`` (a Hankel matrix)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (m + d - 1,):
        raise ValueError(f"expected a vector of length {m + d - 1}, got shape {z.shape}")
    idx = np.arange(m)[:, None] + np.arange(d)[None, :]
    return z[idx]


class ConvLift(LinearOp):
    """Convolution as a linear map on ``m x d`` matrices (length ``m + d - 1`` output)."""

    def __init__(self, m, d):
        super().__init__((m, d), (m + d - 1,))
        self.m = int(m)
        self.d = int(d)

    def _apply(self, x):
        return conv_lift_apply(x)

    def _adjoint(self, y):
        return conv_lift_adjoint(y, self.m, self.d)


def operator_norm(op, iterations=200, tol=1e-12):
    """Spectral norm of ``op`` by power iteration on ``op^T op``.

    Orthogonal operators return exactly 1. The start vector is fixed, so the
    estimate is deterministic.
    """
    if op.is_orthogonal:
        return 1.0
    if isinstance(op, Dense):
        return float(np.linalg.norm(op.matrix, 2))
    x = np.ones(op.in_shape) + 0.01 * np.arange(int(np.prod(op.in_shape))).reshape(op.in_shape)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(iterations):
        y = op.adjoint(op.apply(x))
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        x = y / norm
        if abs(norm - estimate) <= tol * norm:
            estimate = norm
            break
        estimate = norm
    return float(np.sqrt(estimate))
