"""Empirical phase transition for demixing two sparse signals.

Each trial draws an ``s_x``-sparse ``x0``, an ``s_y``-sparse coefficient
vector ``c0`` and a Haar rotation ``Q``, observes ``z0 = x0 + Q^T c0`` and
solves::

    minimize ||x||_1 + lam ||Q y||_1   subject to  x + y = z0

for every ``lam`` on a grid. A trial succeeds when some ``lam`` returns
``x`` within ``success_tol`` relative error of ``x0``. Each cell also gets
the normalized total statistical dimension of the two l1 descent cones.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..geometry import ConeModel, gaussian_generator, sdim_monte_carlo, sign_pattern, total_delta
from ..operators import haar_orthogonal
from ..solvers import SolverOptions

__all__ = [
    "DEFAULT_LAMBDAS",
    "PhaseGridSpec",
    "PhaseCell",
    "PhaseGridResult",
    "Crossing",
    "run_phase_diagram",
    "admm_l1_rotated_batch",
    "draw_trial",
    "sparsity_levels",
]

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = tuple(float(v) for v in np.logspace(-2.0, 2.0, 9))
CONTOUR_LEVELS = (0.05, 0.5, 0.95)
PHASE_SOLVER = SolverOptions(max_iter=3000, primal_tol=1e-7, dual_tol=1e-7)


def sparsity_levels(d, count):
    """``count`` evenly spaced sparsities from 0 to ``d``, with 0 bumped to 1."""
    levels = np.rint(np.linspace(0, d, count)).astype(int)
    levels[levels < 1] = 1
    return tuple(sorted(set(int(v) for v in levels)))


@dataclass(frozen=True)
class PhaseGridSpec:
    d: int = 64
    sparsity_grid: tuple = ()
    trials_per_cell: int = 25
    lambda_grid: tuple = DEFAULT_LAMBDAS
    success_tol: float = 1e-3
    seed: int = 0
    solver: SolverOptions = PHASE_SOLVER
    delta_samples: int = 20000

    def __post_init__(self):
        pairs = tuple((int(a), int(b)) for a, b in self.sparsity_grid)
        object.__setattr__(self, "sparsity_grid", pairs)
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        if self.d < 1:
            raise ValueError("d must be positive")
        if not pairs:
            raise ValueError("sparsity_grid is empty")
        for s_x, s_y in pairs:
            if not (1 <= s_x <= self.d and 1 <= s_y <= self.d):
                raise ValueError(f"sparsity pair {(s_x, s_y)} outside [1, {self.d}]")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be at least 1")
        if not self.lambda_grid or min(self.lambda_grid) <= 0:
            raise ValueError("lambda_grid must hold positive values")
        if not self.success_tol > 0:
            raise ValueError("success_tol must be positive")

    @classmethod
    def square(cls, d=64, count=17, **kwargs):
        """Full product grid over :func:`sparsity_levels` ``(d, count)``."""
        levels = sparsity_levels(d, count)
        return cls(d=d, sparsity_grid=tuple((a, b) for a in levels for b in levels), **kwargs)


@dataclass(frozen=True)
class PhaseCell:
    s_x: int
    s_y: int
    success_rate: float
    delta: float
    successes: int
    trials: int
    diverged: int = 0


@dataclass(frozen=True)
class Crossing:
    """Where the success rate passes 0.5 between two neighbouring cells."""

    cell_a: tuple
    cell_b: tuple
    delta: float


@dataclass
class PhaseGridResult:
    spec: PhaseGridSpec
    cells: list
    contours: dict = field(default_factory=dict)

    def cell(self, s_x, s_y):
        for c in self.cells:
            if c.s_x == s_x and c.s_y == s_y:
                return c
        raise KeyError((s_x, s_y))

    def axes(self):
        xs = sorted({c.s_x for c in self.cells})
        ys = sorted({c.s_y for c in self.cells})
        return xs, ys

    def as_arrays(self):
        """``(xs, ys, rates, deltas)`` with ``rates[i, j]`` at ``(xs[i], ys[j])``; gaps are NaN."""
        xs, ys = self.axes()
        rates = np.full((len(xs), len(ys)), np.nan)
        deltas = np.full((len(xs), len(ys)), np.nan)
        ix = {v: i for i, v in enumerate(xs)}
        iy = {v: j for j, v in enumerate(ys)}
        for c in self.cells:
            rates[ix[c.s_x], iy[c.s_y]] = c.success_rate
            deltas[ix[c.s_x], iy[c.s_y]] = c.delta
        return xs, ys, rates, deltas

    @staticmethod
    def level_curve(values, level):
        """Polylines of ``values == level`` in fractional index coordinates ``(i, j)``."""
        import contourpy

        values = np.asarray(values, dtype=float)
        if values.shape[0] < 2 or values.shape[1] < 2 or np.isnan(values).any():
            return []
        gen = contourpy.contour_generator(z=values.T, line_type=contourpy.LineType.Separate)
        return [np.asarray(line) for line in gen.lines(level)]

    def compute_contours(self, levels=CONTOUR_LEVELS):
        xs, ys, rates, _ = self.as_arrays()
        out = {}
        for level in levels:
            curves = []
            for line in self.level_curve(rates, level):
                sx = np.interp(line[:, 0], np.arange(len(xs)), xs)
                sy = np.interp(line[:, 1], np.arange(len(ys)), ys)
                curves.append(np.column_stack([sx, sy]))
            out[level] = curves
        self.contours = out
        return out

    def crossings(self, level=0.5):
        """All neighbouring pairs (along rows and columns) whose rates straddle ``level``.

        The reported ``delta`` is linearly interpolated to where the rate
        equals ``level``.
        """
        xs, ys, rates, deltas = self.as_arrays()
        found = []
        for axis in (0, 1):
            for line in range(rates.shape[1 - axis]):
                r = rates[:, line] if axis == 0 else rates[line, :]
                dl = deltas[:, line] if axis == 0 else deltas[line, :]
                for k in range(len(r) - 1):
                    a, b = r[k], r[k + 1]
                    if np.isnan(a) or np.isnan(b):
                        continue
                    if (a >= level) == (b >= level):
                        continue
                    frac = (level - a) / (b - a)
                    delta = dl[k] + frac * (dl[k + 1] - dl[k])
                    if axis == 0:
                        cells = ((xs[k], ys[line]), (xs[k + 1], ys[line]))
                    else:
                        cells = ((xs[line], ys[k]), (xs[line], ys[k + 1]))
                    found.append(Crossing(cells[0], cells[1], float(delta)))
        return found


def draw_trial(d, s_x, s_y, rng):
    """Ground truth ``(x0, c0, Q)`` for one trial; nonzeros are standard Gaussian."""
    x0 = np.zeros(d)
    x0[rng.choice(d, s_x, replace=False)] = rng.standard_normal(s_x)
    c0 = np.zeros(d)
    c0[rng.choice(d, s_y, replace=False)] = rng.standard_normal(s_y)
    rotation = haar_orthogonal(d, rng)
    return x0, c0, rotation


def admm_l1_rotated_batch(observations, rotations, lambdas, opts=PHASE_SOLVER, check_every=10):
    """Vectorized ADMM for ``min ||x||_1 + lam ||Q y||_1  s.t.  x + y = z0``.

    Runs the same iteration as :func:`demixkit.solvers.admm_demix` on every
    (trial, lambda) pair at once. ``observations`` is ``(T, d)``,
    ``rotations`` ``(T, d, d)``; returns ``(x, y, iterations, finite)`` with
    ``x`` and ``y`` of shape ``(T, L, d)``. Convergence is tested every
    ``check_every`` sweeps and the loop ends when every problem has met the
    stopping rule.
    """
    z1 = np.asarray(observations, dtype=float)
    rot = np.asarray(rotations, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    ntrials, d = z1.shape
    z = np.repeat(z1[:, None, :], lam.size, axis=1)
    rot_t = rot.transpose(0, 2, 1)
    rho = opts.rho
    x = np.zeros_like(z)
    y = np.zeros_like(z)
    w = np.zeros_like(z)
    thresh = (rho * lam)[None, :, None]
    z_scale = np.maximum(1.0, np.linalg.norm(z, axis=2))
    iteration = 0
    for iteration in range(1, opts.max_iter + 1):
        u = z - y - rho * w
        x_new = np.sign(u) * np.maximum(np.abs(u) - rho, 0.0)
        coeffs = np.matmul(z - x_new - rho * w, rot_t)
        coeffs = np.sign(coeffs) * np.maximum(np.abs(coeffs) - thresh, 0.0)
        y_new = np.matmul(coeffs, rot)
        resid = x_new + y_new - z
        w += resid / rho
        if iteration % check_every == 0 or iteration == opts.max_iter:
            change = np.sqrt(np.sum((x_new - x) ** 2, axis=2) + np.sum((y_new - y) ** 2, axis=2))
            primal = np.linalg.norm(resid, axis=2)
            scale = np.maximum(1.0, np.linalg.norm(x_new, axis=2) + np.linalg.norm(y_new, axis=2))
            done = (primal <= opts.primal_tol * z_scale) & (change <= opts.dual_tol * scale)
            x, y = x_new, y_new
            if done.all() or not np.isfinite(w).all():
                break
        else:
            x, y = x_new, y_new
    finite = np.isfinite(x).all(axis=2) & np.isfinite(y).all(axis=2)
    return x, y, iteration, finite


def _run_cell(spec, s_x, s_y):
    xs, zs, rots = [], [], []
    for trial in range(spec.trials_per_cell):
        rng = gaussian_generator(spec.seed, s_x, s_y, trial)
        x0, c0, rot = draw_trial(spec.d, s_x, s_y, rng)
        xs.append(x0)
        zs.append(x0 + rot.T @ c0)
        rots.append(rot)
    x0 = np.asarray(xs)
    with np.errstate(over="ignore", invalid="ignore"):
        xhat, _, _, finite = admm_l1_rotated_batch(
            np.asarray(zs), np.asarray(rots), spec.lambda_grid, spec.solver
        )
        err = np.linalg.norm(xhat - x0[:, None, :], axis=2) / np.linalg.norm(x0, axis=1)[:, None]
    ok = (err <= spec.success_tol) & finite
    diverged = int((~finite).any(axis=1).sum())
    if diverged:
        log.warning("cell (%d, %d): %d trial(s) produced non-finite iterates", s_x, s_y, diverged)
    return int(ok.any(axis=1).sum()), diverged


def _cell_job(args):
    spec, s_x, s_y = args
    return _run_cell(spec, s_x, s_y)


def _sdim_table(spec):
    sparsities = sorted({s for pair in spec.sparsity_grid for s in pair})
    return {
        s: sdim_monte_carlo(
            ConeModel.descent_l1(sign_pattern(spec.d, s)), spec.delta_samples, seed=spec.seed
        ).mean
        for s in sparsities
    }


def run_phase_diagram(spec, threads=1):
    """Run every cell of ``spec``; the result is identical for any ``threads``."""
    sdims = _sdim_table(spec)
    jobs = [(spec, s_x, s_y) for s_x, s_y in spec.sparsity_grid]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_cell_job, jobs))
    else:
        outcomes = [_cell_job(job) for job in jobs]
    cells = []
    for (s_x, s_y), (successes, diverged) in zip(spec.sparsity_grid, outcomes):
        cells.append(
            PhaseCell(
                s_x=s_x,
                s_y=s_y,
                success_rate=successes / spec.trials_per_cell,
                delta=total_delta(spec.d, [sdims[s_x], sdims[s_y]]),
                successes=successes,
                trials=spec.trials_per_cell,
                diverged=diverged,
            )
        )
    result = PhaseGridResult(spec=spec, cells=cells)
    result.compute_contours()
    return result


def theory_band(d, margin_constant=1.0):
    """The ``delta`` interval ``1 +/- C / sqrt(d)`` where the theory is silent."""
    half = margin_constant / math.sqrt(d)
    return 1.0 - half, 1.0 + half
