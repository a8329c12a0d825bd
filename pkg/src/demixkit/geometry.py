"""Statistical dimension of convex cones and phase-transition prediction.

The statistical dimension of a closed convex cone ``C`` is
``E ||Proj_C(g)||^2`` for a standard Gaussian ``g``. For the descent cone of
the l1 norm at a point with sign pattern ``s``, the polar cone is the cone
generated by the subdifferential, so::

    ||Proj_C(g)||^2 = dist^2(g, C_polar)
                    = min_{t >= 0}  sum_{s_i != 0} (g_i - t s_i)^2
                                  + sum_{s_i == 0} (|g_i| - t)_+^2

and the one-dimensional minimum is found exactly by :func:`polar_distance_l1`.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize, stats

__all__ = [
    "ConeModel",
    "SdimEstimate",
    "Prediction",
    "polar_distance_l1",
    "polar_distance_l1_batch",
    "sdim_monte_carlo",
    "sdim_l1_descent",
    "l1_descent_sdim_bound",
    "sign_pattern",
    "total_delta",
    "predict_success",
    "gaussian_generator",
]

SHARD_SIZE = 2000


class ConeKind(str, Enum):
    SUBSPACE = "subspace"
    ORTHANT = "orthant"
    DESCENT_L1 = "descent_l1"


@dataclass(frozen=True)
class ConeModel:
    """A cone we know how to project onto.

    Use the constructors :meth:`subspace`, :meth:`orthant` and
    :meth:`descent_l1` rather than filling the fields by hand.
    """

    kind: ConeKind
    d: int
    k: int = 0
    signs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ConeKind(self.kind))
        if self.d < 1:
            raise ValueError("ambient dimension must be positive")
        if self.kind is ConeKind.SUBSPACE and not 0 <= self.k <= self.d:
            raise ValueError(f"subspace dimension {self.k} outside [0, {self.d}]")
        if self.kind is ConeKind.DESCENT_L1:
            if len(self.signs) != self.d:
                raise ValueError("sign pattern length must equal d")
            if any(s not in (-1, 0, 1) for s in self.signs):
                raise ValueError("sign pattern entries must be -1, 0 or +1")

    @classmethod
    def subspace(cls, k, d):
        return cls(ConeKind.SUBSPACE, int(d), k=int(k))

    @classmethod
    def orthant(cls, d):
        return cls(ConeKind.ORTHANT, int(d))

    @classmethod
    def descent_l1(cls, signs):
        signs = tuple(int(s) for s in np.sign(np.asarray(signs)).astype(int))
        return cls(ConeKind.DESCENT_L1, len(signs), signs=signs)

    @property
    def sparsity(self):
        return sum(1 for s in self.signs if s != 0)


@dataclass(frozen=True)
class SdimEstimate:
    mean: float
    stderr: float
    samples: int

    def contains(self, value, width=3.0):
        return abs(self.mean - value) <= width * self.stderr


class Prediction(str, Enum):
    LIKELY_SUCCESS = "LikelySuccess"
    LIKELY_FAILURE = "LikelyFailure"
    INDETERMINATE = "Indeterminate"


def gaussian_generator(*seed_words):
    """Counter-based (Philox) generator keyed by a tuple of integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(seed_words))))


def sign_pattern(d, s, positive=True):
    """The pattern ``(1, ..., 1, 0, ..., 0)`` with ``s`` leading ones.

    The statistical dimension of an l1 descent cone depends only on
    ``(d, s)``, so this canonical pattern stands in for any ``s``-sparse one.
    """
    if not 0 <= s <= d:
        raise ValueError(f"sparsity {s} outside [0, {d}]")
    pattern = np.zeros(d, dtype=int)
    pattern[:s] = 1 if positive else -1
    return pattern


def polar_distance_l1_batch(gs, signs):
    """Vectorized :func:`polar_distance_l1` over the rows of ``gs``."""
    gs = np.atleast_2d(np.asarray(gs, dtype=float))
    signs = np.asarray(signs)
    if gs.shape[1] != signs.size:
        raise ValueError("sign pattern length does not match the samples")
    on = signs != 0
    k = int(on.sum())
    ngroups = gs.shape[0]
    if k:
        g_on = gs[:, on]
        s_on = signs[on].astype(float)
        lin = g_on @ s_on
        sq = np.einsum("ij,ij->i", g_on, g_on)
    else:
        lin = np.zeros(ngroups)
        sq = np.zeros(ngroups)
    # off-support magnitudes in decreasing order: a_1 >= a_2 >= ... >= a_m
    a = -np.sort(-np.abs(gs[:, ~on]), axis=1)
    m = a.shape[1]
    zero_col = np.zeros((ngroups, 1))
    csum = np.hstack([zero_col, np.cumsum(a, axis=1)])
    csq = np.hstack([zero_col, np.cumsum(a * a, axis=1)])
    best = np.full(ngroups, np.inf)
    # piece j: t in [a_{j+1}, a_j] with the j largest off-support terms active
    upper = np.hstack([np.full((ngroups, 1), np.inf), a])
    lower = np.hstack([a, zero_col])
    for j in range(m + 1):
        n_active = k + j
        b = lin + csum[:, j]
        c = sq + csq[:, j]
        lo, hi = lower[:, j], upper[:, j]
        if n_active == 0:
            # F is identically zero on [a_1, inf)
            best = np.minimum(best, c)
            continue
        t = np.clip(b / n_active, lo, hi)
        value = n_active * t * t - 2.0 * b * t + c
        best = np.minimum(best, value)
    return np.maximum(best, 0.0)


def polar_distance_l1(g, signs):
    """Squared distance from ``g`` to the polar of the l1 descent cone with pattern ``signs``.

    This equals ``||Proj_C(g)||^2`` for the descent cone ``C`` itself. The
    piecewise-quadratic minimization over ``t >= 0`` is done exactly by
    visiting every piece between consecutive breakpoints.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size != np.asarray(signs).size:
        raise ValueError("g and signs must be vectors of equal length")
    return float(polar_distance_l1_batch(g[None, :], signs)[0])


def _projection_sq_norms(cone, gs):
    if cone.kind is ConeKind.SUBSPACE:
        # a coordinate subspace; the Gaussian is rotation invariant
        return np.einsum("ij,ij->i", gs[:, : cone.k], gs[:, : cone.k])
    if cone.kind is ConeKind.ORTHANT:
        pos = np.maximum(gs, 0.0)
        return np.einsum("ij,ij->i", pos, pos)
    return polar_distance_l1_batch(gs, np.asarray(cone.signs))


def _shard(cone, seed, index, count):
    gs = gaussian_generator(seed, index).standard_normal((count, cone.d))
    return _projection_sq_norms(cone, gs)


def sdim_monte_carlo(cone, samples, seed=0, threads=1):
    """Monte Carlo estimate of the statistical dimension of ``cone``.

    Samples are drawn in fixed shards of ``SHARD_SIZE``, shard ``i`` from
    the stream keyed by ``(seed, i)``, so the estimate does not depend on
    ``threads``.
    """
    if samples < 100:
        raise ValueError("use at least 100 samples")
    sizes = [SHARD_SIZE] * (samples // SHARD_SIZE)
    if samples % SHARD_SIZE:
        sizes.append(samples % SHARD_SIZE)
    jobs = [(cone, seed, i, n) for i, n in enumerate(sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda job: _shard(*job), jobs))
    else:
        chunks = [_shard(*job) for job in jobs]
    values = np.concatenate(chunks)
    return SdimEstimate(
        mean=float(values.mean()),
        stderr=float(values.std(ddof=1) / math.sqrt(samples)),
        samples=int(samples),
    )


def l1_descent_sdim_bound(d, s):
    """Upper bound ``inf_t E dist^2(g, t * subdiff)`` for the l1 descent cone.

    Computed by quadrature; it exceeds the statistical dimension by at most
    ``2 sqrt(d / s)`` (for ``s >= 1``), which makes it a useful independent
    check on Monte Carlo estimates.
    """
    if s == 0:
        return 0.0

    def tail(t):
        # E (|g| - t)_+^2 = 2 * int_t^inf (u - t)^2 phi(u) du
        return 2.0 * integrate.quad(lambda u: (u - t) ** 2 * stats.norm.pdf(u), t, np.inf)[0]

    def objective(t):
        return s * (1.0 + t * t) + (d - s) * tail(t)

    res = optimize.minimize_scalar(objective, bounds=(0.0, 10.0), method="bounded",
                                   options={"xatol": 1e-10})
    return float(res.fun)


def sdim_l1_descent(d, s, samples=4000, seed=0):
    """Statistical dimension of the l1 descent cone at an ``s``-sparse point of R^d."""
    return sdim_monte_carlo(ConeModel.descent_l1(sign_pattern(d, s)), samples, seed).mean


def total_delta(d, cones, samples=4000, seed=0):
    """Normalized total statistical dimension ``(delta_1 + ... + delta_k) / d``.

    ``cones`` may mix precomputed statistical dimensions (numbers) and
    :class:`ConeModel` instances, which are estimated by Monte Carlo.
    """
    if d < 1:
        raise ValueError("d must be positive")
    total = 0.0
    for index, cone in enumerate(cones):
        if isinstance(cone, ConeModel):
            if cone.d != d:
                raise ValueError(f"cone ambient dimension {cone.d} differs from d = {d}")
            total += sdim_monte_carlo(cone, samples, seed=seed + index).mean
        elif isinstance(cone, SdimEstimate):
            total += cone.mean
        else:
            value = float(cone)
            if value < 0 or value > d:
                raise ValueError(f"statistical dimension {value} outside [0, {d}]")
            total += value
    return total / d


def predict_success(delta, d, margin_constant=1.0):
    """Classify ``delta`` against the band ``1 +/- margin_constant / sqrt(d)``."""
    if d < 1:
        raise ValueError("d must be positive")
    if not margin_constant > 0:
        raise ValueError("margin_constant must be positive")
    margin = margin_constant / math.sqrt(d)
    if delta <= 1.0 - margin:
        return Prediction.LIKELY_SUCCESS
    if delta >= 1.0 + margin:
        return Prediction.LIKELY_FAILURE
    return Prediction.INDETERMINATE
