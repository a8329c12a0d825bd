"""Atomic gauges and their proximal operators.

Every gauge here is the Minkowski functional of the convex hull of an atom
set: signed basis vectors (``L1``), sign vectors (``Linf``), unit rank-one
matrices (``Schatten1``), orthogonal matrices (``SchattenInf``), matrices with
a single unit row (``RowL12``), PSD rank-one matrices (``PsdTrace``) and the
diagonal matrices (``DiagIndicator``).

The proximal map of ``g`` with step ``rho`` is::

    prox(g, u, rho) = argmin_x  g(x) + ||u - x||^2 / (2 rho)

Gauges may return ``math.inf``; that value is produced explicitly and never by
overflowing arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import NumericalError

__all__ = [
    "GaugeKind",
    "GaugeSpec",
    "gauge_eval",
    "dual_gauge_eval",
    "prox",
    "project_l1_ball",
    "soft_threshold",
    "subgradient_violation",
]

# relative tolerances for membership tests on numerically computed matrices
SYMMETRY_TOL = 1e-8
PSD_TOL = 1e-10
DIAG_TOL = 1e-12
SUPPORT_TOL = 1e-9


class GaugeKind(str, Enum):
    L1 = "L1"
    LINF = "Linf"
    SCHATTEN1 = "Schatten1"
    SCHATTEN_INF = "SchattenInf"
    ROW_L12 = "RowL12"
    PSD_TRACE = "PsdTrace"
    DIAG_INDICATOR = "DiagIndicator"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).replace("_", "").replace("-", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown gauge kind {value!r}")


_MATRIX_KINDS = {
    GaugeKind.SCHATTEN1,
    GaugeKind.SCHATTEN_INF,
    GaugeKind.ROW_L12,
    GaugeKind.PSD_TRACE,
    GaugeKind.DIAG_INDICATOR,
}
_SQUARE_KINDS = {GaugeKind.PSD_TRACE, GaugeKind.DIAG_INDICATOR}


@dataclass(frozen=True)
class GaugeSpec:
    """Which gauge, and the shape of the signals it measures.

    ``L1`` and ``Linf`` accept any shape (matrices are treated as long
    vectors); the matrix gauges need a 2-D shape, and ``PsdTrace`` /
    ``DiagIndicator`` need it square.
    """

    kind: GaugeKind
    shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", GaugeKind.parse(self.kind))
        shape = (self.shape,) if np.isscalar(self.shape) else tuple(self.shape)
        shape = tuple(int(n) for n in shape)
        object.__setattr__(self, "shape", shape)
        if not shape or any(n < 1 for n in shape):
            raise ValueError(f"invalid gauge shape {shape}")
        if self.kind in _MATRIX_KINDS and len(shape) != 2:
            raise ValueError(f"{self.kind.value} needs a matrix shape, got {shape}")
        if self.kind in _SQUARE_KINDS and shape[0] != shape[1]:
            raise ValueError(f"{self.kind.value} needs a square shape, got {shape}")

    @property
    def is_indicator(self):
        return self.kind is GaugeKind.DIAG_INDICATOR


def _check(gauge, point):
    point = np.asarray(point, dtype=float)
    if point.shape != gauge.shape:
        raise ValueError(
            f"point of shape {point.shape} does not match {gauge.kind.value} "
            f"gauge of shape {gauge.shape}"
        )
    return point


def _svd(a):
    try:
        return np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("SVD did not converge", shape=a.shape, reason=str(exc)) from exc


def _eigh(a):
    try:
        return np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "symmetric eigendecomposition did not converge", shape=a.shape, reason=str(exc)
        ) from exc


def _singular_values(a):
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("SVD did not converge", shape=a.shape, reason=str(exc)) from exc


def _is_symmetric(a):
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return float(np.abs(a - a.T).max(initial=0.0)) <= SYMMETRY_TOL * scale


def _off_diagonal(a):
    return a - np.diag(np.diag(a))


def gauge_eval(gauge, point):
    """Value of the gauge at ``point`` (a float, possibly ``math.inf``).

    Raises
    ------
    ValueError
        If ``point`` does not have the gauge's shape.
    """
    x = _check(gauge, point)
    kind = gauge.kind
    if kind is GaugeKind.L1:
        return float(np.abs(x).sum())
    if kind is GaugeKind.LINF:
        return float(np.abs(x).max())
    if kind is GaugeKind.SCHATTEN1:
        return float(_singular_values(x).sum())
    if kind is GaugeKind.SCHATTEN_INF:
        return float(_singular_values(x)[0])
    if kind is GaugeKind.ROW_L12:
        return float(np.linalg.norm(x, axis=1).sum())
    if kind is GaugeKind.PSD_TRACE:
        if not _is_symmetric(x):
            return math.inf
        sym = 0.5 * (x + x.T)
        eigvals = np.linalg.eigvalsh(sym)
        scale = max(1.0, float(np.abs(eigvals).max()))
        if eigvals[0] < -PSD_TOL * scale:
            return math.inf
        return float(np.trace(sym))
    if kind is GaugeKind.DIAG_INDICATOR:
        scale = max(1.0, float(np.abs(x).max()))
        if np.abs(_off_diagonal(x)).max(initial=0.0) > DIAG_TOL * scale:
            return math.inf
        return 0.0
    raise NotImplementedError(kind)


def dual_gauge_eval(gauge, point):
    """Value of the polar (dual) gauge, used by optimality certificates.

    For the indicator of the diagonal subspace the polar is the indicator of
    the matrices with zero diagonal; for ``PsdTrace`` it is
    ``max(lambda_max(sym(G)), 0)`` on symmetric input.
    """
    g = _check(gauge, point)
    kind = gauge.kind
    if kind is GaugeKind.L1:
        return float(np.abs(g).max())
    if kind is GaugeKind.LINF:
        return float(np.abs(g).sum())
    if kind is GaugeKind.SCHATTEN1:
        return float(_singular_values(g)[0])
    if kind is GaugeKind.SCHATTEN_INF:
        return float(_singular_values(g).sum())
    if kind is GaugeKind.ROW_L12:
        return float(np.linalg.norm(g, axis=1).max())
    if kind is GaugeKind.PSD_TRACE:
        if not _is_symmetric(g):
            return math.inf
        return max(float(np.linalg.eigvalsh(0.5 * (g + g.T))[-1]), 0.0)
    if kind is GaugeKind.DIAG_INDICATOR:
        scale = max(1.0, float(np.abs(g).max()))
        return 0.0 if np.abs(np.diag(g)).max() <= DIAG_TOL * scale else math.inf
    raise NotImplementedError(kind)


def soft_threshold(u, threshold):
    """Entrywise shrinkage toward zero; entries with ``|u_i| <= threshold`` map to 0."""
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.maximum(np.abs(u) - threshold, 0.0)


def project_l1_ball(u, radius):
    """Euclidean projection of ``u`` onto ``{x : ||x||_1 <= radius}``.

    Sort-based, O(d log d). Inputs already inside the ball are returned
    unchanged (as a copy).
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    u = np.asarray(u, dtype=float)
    flat = u.ravel()
    magnitudes = np.abs(flat)
    if magnitudes.sum() <= radius:
        return u.copy()
    ordered = np.sort(magnitudes)[::-1]
    cumulative = np.cumsum(ordered) - radius
    index = np.arange(1, ordered.size + 1)
    count = np.nonzero(ordered * index > cumulative)[0][-1] + 1
    theta = cumulative[count - 1] / count
    return (np.sign(flat) * np.maximum(magnitudes - theta, 0.0)).reshape(u.shape)


def prox(gauge, point, step):
    """Proximal map of ``gauge`` with step ``step`` evaluated at ``point``.

    Raises
    ------
    ValueError
        On a shape mismatch or a non-positive step.
    NumericalError
        If an SVD or eigendecomposition fails to converge.
    """
    if not step > 0:
        raise ValueError(f"prox step must be positive, got {step}")
    u = _check(gauge, point)
    kind = gauge.kind
    if kind is GaugeKind.L1:
        return soft_threshold(u, step)
    if kind is GaugeKind.LINF:
        return u - project_l1_ball(u, step)
    if kind is GaugeKind.SCHATTEN1:
        left, sv, right = _svd(u)
        return (left * np.maximum(sv - step, 0.0)) @ right
    if kind is GaugeKind.SCHATTEN_INF:
        left, sv, right = _svd(u)
        return (left * (sv - project_l1_ball(sv, step))) @ right
    if kind is GaugeKind.ROW_L12:
        norms = np.linalg.norm(u, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(norms > step, 1.0 - step / norms, 0.0)
        return u * factor
    if kind is GaugeKind.PSD_TRACE:
        sym = 0.5 * (u + u.T)
        eigvals, eigvecs = _eigh(sym)
        shrunk = np.maximum(eigvals - step, 0.0)
        out = (eigvecs * shrunk) @ eigvecs.T
        return 0.5 * (out + out.T)
    if kind is GaugeKind.DIAG_INDICATOR:
        return np.diag(np.diag(u))
    raise NotImplementedError(kind)


def subgradient_violation(gauge, point, candidate):
    """How far ``candidate`` is from the subdifferential of the gauge at ``point``.

    Zero means ``candidate`` is a subgradient. For norms this checks the two
    conditions ``dual(G) <= 1`` and ``<G, x> = g(x)``; ``L1`` uses the sharper
    entrywise form (sign match on the support, magnitude at most one off it).
    """
    x = _check(gauge, point)
    g = _check(gauge, candidate)
    kind = gauge.kind
    if kind is GaugeKind.L1:
        scale = max(1.0, float(np.abs(x).max(initial=0.0)))
        support = np.abs(x) > SUPPORT_TOL * scale
        on = np.abs(g[support] - np.sign(x[support])).max(initial=0.0)
        off = np.maximum(np.abs(g[~support]) - 1.0, 0.0).max(initial=0.0)
        return float(max(on, off))
    if kind is GaugeKind.DIAG_INDICATOR:
        if gauge_eval(gauge, x) == math.inf:
            return math.inf
        return float(np.abs(np.diag(g)).max())
    if kind is GaugeKind.PSD_TRACE:
        value = gauge_eval(gauge, x)
        if value == math.inf:
            return math.inf
        asym = float(np.abs(g - g.T).max())
        slack = np.eye(x.shape[0]) - 0.5 * (g + g.T)
        negativity = max(-float(np.linalg.eigvalsh(slack)[0]), 0.0)
        complementarity = abs(float(np.sum(slack * x))) / max(1.0, value)
        return max(asym, negativity, complementarity)
    value = gauge_eval(gauge, x)
    outside = max(dual_gauge_eval(gauge, g) - 1.0, 0.0)
    gap = abs(float(np.sum(g * x)) - value) / max(1.0, value)
    return max(outside, gap)
