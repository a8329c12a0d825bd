"""Solvers for gauge-regularized demixing programs.

The generic program is::

    minimize   sum_i w_i * g_i(T_i x_i)  [+ lam_E * ||E||_F^2]
    subject to Phi(x_1 + ... + x_k [+ E]) = z0

where each ``g_i`` is an atomic gauge, ``T_i`` an optional orthogonal
dictionary and ``Phi`` a linear measurement map.

Two methods are provided. :func:`admm_demix` is the two-block alternating
direction method of multipliers for ``Phi = I``. :func:`decomposition_demix`
linearizes the coupling so every block takes an independent proximal step;
it handles any ``Phi``, any number of blocks and the quadratic slack term.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .atoms import GaugeSpec, gauge_eval, prox, subgradient_violation
from .operators import Identity, LinearOp, operator_norm

__all__ = [
    "Component",
    "DemixProblem",
    "SolverOptions",
    "SolveResult",
    "Status",
    "KKTReport",
    "L0Solution",
    "admm_demix",
    "decomposition_demix",
    "demix",
    "kkt_check",
    "l0_oracle",
    "component_value",
    "component_prox",
    "problem_objective",
]

# rho is capped at this fraction of 1/||[Phi ... Phi]|| in the decomposition method
DECOMPOSITION_STEP_SAFETY = 0.9
# residual balancing runs every ADAPT_EVERY sweeps and is frozen after
# ADAPT_UNTIL so the tail is plain fixed-rho ADMM (which converges)
ADAPT_EVERY = 10
ADAPT_UNTIL = 1000


@dataclass(frozen=True)
class Component:
    """One structured term ``weight * gauge(transform(x))`` of the objective.

    ``transform`` must be orthogonal (DCT, a rotation, the identity) so the
    composed gauge keeps an exact prox through a change of variables.
    """

    gauge: GaugeSpec
    weight: float = 1.0
    transform: LinearOp | None = None

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"component weight must be positive, got {self.weight}")
        if self.transform is not None:
            if not self.transform.is_orthogonal:
                raise ValueError("component transforms must be orthogonal")
            if self.transform.out_shape != self.gauge.shape:
                raise ValueError("transform output shape must match the gauge shape")

    @property
    def shape(self):
        if self.transform is not None:
            return self.transform.in_shape
        return self.gauge.shape


def _as_component(item):
    if isinstance(item, Component):
        return item
    if isinstance(item, GaugeSpec):
        return Component(item)
    return Component(*item)


@dataclass
class DemixProblem:
    observation: np.ndarray
    components: list
    measurement: LinearOp | None = None
    quadratic_slack: float | None = None

    def __post_init__(self):
        self.observation = np.asarray(self.observation, dtype=float)
        self.components = [_as_component(c) for c in self.components]
        if self.measurement is None:
            self.measurement = Identity(self.observation.shape)
        if self.measurement.out_shape != self.observation.shape:
            raise ValueError(
                f"measurement output shape {self.measurement.out_shape} does not "
                f"match observation shape {self.observation.shape}"
            )
        needed = 1 if self.quadratic_slack is not None else 2
        if len(self.components) < needed and not (
            len(self.components) == 1 and not isinstance(self.measurement, Identity)
        ):
            raise ValueError(f"need at least {needed} components")
        if self.quadratic_slack is not None and not self.quadratic_slack > 0:
            raise ValueError("quadratic_slack weight must be positive")
        for comp in self.components:
            if comp.shape != self.measurement.in_shape:
                raise ValueError(
                    f"component shape {comp.shape} does not match the measurement "
                    f"input shape {self.measurement.in_shape}"
                )

    @property
    def signal_shape(self):
        return self.measurement.in_shape


@dataclass(frozen=True)
class SolverOptions:
    rho: float = 1.0
    max_iter: int = 5000
    primal_tol: float = 1e-8
    dual_tol: float = 1e-8
    seed: int = 0
    adaptive_rho: bool = False
    random_init: bool = False

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not (self.primal_tol > 0 and self.dual_tol > 0):
            raise ValueError("tolerances must be positive")


class Status(str, Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    DIVERGED = "Diverged"


@dataclass
class SolveResult:
    components: list
    dual: np.ndarray
    iterations: int
    primal_residual: np.ndarray
    dual_residual: np.ndarray
    objective: float
    status: Status
    rho: float = 1.0

    @property
    def converged(self):
        return self.status is Status.CONVERGED


def component_value(comp, x):
    if comp.transform is not None:
        x = comp.transform.apply(x)
    value = gauge_eval(comp.gauge, x)
    if comp.gauge.is_indicator:
        return value
    return comp.weight * value


def component_prox(comp, u, step):
    """``argmin_x weight * gauge(T x) + ||u - x||^2 / (2 step)``."""
    if comp.transform is None:
        return prox(comp.gauge, u, step * comp.weight)
    coeffs = prox(comp.gauge, comp.transform.apply(u), step * comp.weight)
    return comp.transform.adjoint(coeffs)


def problem_objective(problem, parts):
    total = sum(component_value(c, x) for c, x in zip(problem.components, parts))
    if problem.quadratic_slack is not None:
        slack = parts[len(problem.components)]
        total += problem.quadratic_slack * float(np.sum(slack * slack))
    return float(total)


def _initial_blocks(shape, count, opts):
    if not opts.random_init:
        return [np.zeros(shape) for _ in range(count)]
    rng = np.random.Generator(np.random.Philox(opts.seed))
    return [rng.standard_normal(shape) for _ in range(count)]


def admm_demix(problem, opts=None):
    """Two-block ADMM for ``min g_x(x) + g_y(y)  s.t.  x + y = z0``.

    Iterates, with ``w`` the multiplier and penalty ``1/(2 rho)``::

        x <- prox_{rho g_x}(z0 - y - rho w)
        y <- prox_{rho g_y}(z0 - x - rho w)
        w <- w + (x + y - z0) / rho

    Stops when ``||x + y - z0|| <= primal_tol * max(1, ||z0||)`` and the
    change of ``(x, y)`` between sweeps is at most
    ``dual_tol * max(1, ||x|| + ||y||)``.
    """
    opts = opts or SolverOptions()
    if not isinstance(problem.measurement, Identity):
        raise ValueError("admm_demix needs an identity measurement; use decomposition_demix")
    if len(problem.components) != 2 or problem.quadratic_slack is not None:
        raise ValueError("admm_demix handles exactly two components and no slack term")
    comp_x, comp_y = problem.components
    z0 = problem.observation
    z_scale = max(1.0, float(np.linalg.norm(z0)))
    x, y = _initial_blocks(z0.shape, 2, opts)
    w = np.zeros_like(z0)
    rho = opts.rho
    primal_hist, dual_hist = [], []
    status = Status.MAX_ITER
    iteration = 0
    for iteration in range(1, opts.max_iter + 1):
        x_new = component_prox(comp_x, z0 - y - rho * w, rho)
        y_new = component_prox(comp_y, z0 - x_new - rho * w, rho)
        resid = x_new + y_new - z0
        w = w + resid / rho
        primal = float(np.linalg.norm(resid))
        change = math.hypot(np.linalg.norm(x_new - x), np.linalg.norm(y_new - y))
        dual_res = float(np.linalg.norm(y_new - y)) / rho
        primal_hist.append(primal)
        dual_hist.append(change)
        x, y = x_new, y_new
        if not (math.isfinite(primal) and math.isfinite(change) and np.all(np.isfinite(w))):
            status = Status.DIVERGED
            break
        scale = max(1.0, float(np.linalg.norm(x) + np.linalg.norm(y)))
        if primal <= opts.primal_tol * z_scale and change <= opts.dual_tol * scale:
            status = Status.CONVERGED
            break
        if opts.adaptive_rho and iteration % ADAPT_EVERY == 0 and iteration <= ADAPT_UNTIL:
            if primal > 10.0 * dual_res:
                rho /= 2.0
            elif dual_res > 10.0 * primal:
                rho *= 2.0
    parts = [x, y]
    objective = problem_objective(problem, parts) if status is not Status.DIVERGED else math.nan
    return SolveResult(
        components=parts,
        dual=w,
        iterations=iteration,
        primal_residual=np.asarray(primal_hist),
        dual_residual=np.asarray(dual_hist),
        objective=objective,
        status=status,
        rho=rho,
    )


def decomposition_step(problem, rho):
    """The step actually used by :func:`decomposition_demix` for a requested ``rho``.

    The coupling map ``(x_1, ..., x_k) -> Phi(sum x_i)`` has norm
    ``sqrt(k) ||Phi||``; the step is capped below its reciprocal.
    """
    blocks = len(problem.components) + (problem.quadratic_slack is not None)
    coupling = math.sqrt(blocks) * operator_norm(problem.measurement)
    if coupling == 0.0:
        return rho
    return min(rho, DECOMPOSITION_STEP_SAFETY / coupling)


def decomposition_demix(problem, opts=None):
    """Predictor-corrector decomposition method for general demixing programs.

    Each iteration::

        v   <- w + rho (Phi(sum_i x_i) - z0)
        x_i <- prox_{rho w_i g_i}(x_i - rho Phi^T v)      (all i, independent)
        w   <- w + rho (Phi(sum_i x_i) - z0)

    The quadratic slack block uses ``E <- V / (1 + 2 lam_E rho)``. The
    block updates only read ``v``, so their order does not matter.
    """
    opts = opts or SolverOptions()
    phi = problem.measurement
    z0 = problem.observation
    comps = problem.components
    slack = problem.quadratic_slack
    nblocks = len(comps) + (slack is not None)
    rho = decomposition_step(problem, opts.rho)
    z_scale = max(1.0, float(np.linalg.norm(z0)))
    blocks = _initial_blocks(problem.signal_shape, nblocks, opts)
    w = np.zeros_like(z0)

    def residual(parts):
        return phi.apply(sum(parts)) - z0

    resid = residual(blocks)
    primal_hist, dual_hist = [], []
    status = Status.MAX_ITER
    iteration = 0
    for iteration in range(1, opts.max_iter + 1):
        v = w + rho * resid
        grad = phi.adjoint(v)
        new_blocks = [
            component_prox(comp, x - rho * grad, rho) for comp, x in zip(comps, blocks)
        ]
        if slack is not None:
            new_blocks.append((blocks[-1] - rho * grad) / (1.0 + 2.0 * slack * rho))
        resid = residual(new_blocks)
        w = w + rho * resid
        primal = float(np.linalg.norm(resid))
        change = math.sqrt(sum(float(np.sum((a - b) ** 2)) for a, b in zip(new_blocks, blocks)))
        primal_hist.append(primal)
        dual_hist.append(change)
        blocks = new_blocks
        if not (math.isfinite(primal) and math.isfinite(change) and np.all(np.isfinite(w))):
            status = Status.DIVERGED
            break
        scale = max(1.0, sum(float(np.linalg.norm(b)) for b in blocks))
        if primal <= opts.primal_tol * z_scale and change <= opts.dual_tol * scale:
            status = Status.CONVERGED
            break
    objective = problem_objective(problem, blocks) if status is not Status.DIVERGED else math.nan
    return SolveResult(
        components=blocks,
        dual=w,
        iterations=iteration,
        primal_residual=np.asarray(primal_hist),
        dual_residual=np.asarray(dual_hist),
        objective=objective,
        status=status,
        rho=rho,
    )


def demix(problem, opts=None):
    """Route a problem to ADMM when it has two blocks and ``Phi = I``, else decompose."""
    if (
        isinstance(problem.measurement, Identity)
        and len(problem.components) == 2
        and problem.quadratic_slack is None
    ):
        return admm_demix(problem, opts)
    return decomposition_demix(problem, opts)


@dataclass
class KKTReport:
    """First-order optimality residuals of a candidate solution.

    ``violations[i]`` measures how far ``-Phi^T w`` is from
    ``w_i * subdifferential(g_i)`` at the i-th block (the slack block, when
    present, comes last); ``feasibility_gap`` is ``||Phi(sum x_i) - z0||``.
    """

    violations: list = field(default_factory=list)
    feasibility_gap: float = 0.0

    @property
    def max_violation(self):
        return max(self.violations, default=0.0)


def kkt_check(problem, result):
    parts = result.components if isinstance(result, SolveResult) else result[0]
    dual = result.dual if isinstance(result, SolveResult) else result[1]
    parts = [np.asarray(p, dtype=float) for p in parts]
    dual = np.asarray(dual, dtype=float)
    expected = len(problem.components) + (problem.quadratic_slack is not None)
    if len(parts) != expected:
        raise ValueError(f"expected {expected} blocks, got {len(parts)}")
    for part in parts:
        if part.shape != problem.signal_shape:
            raise ValueError("block shape does not match the problem")
    phi = problem.measurement
    negated = -phi.adjoint(dual)
    violations = []
    for comp, x in zip(problem.components, parts):
        g = negated
        if comp.transform is not None:
            x = comp.transform.apply(x)
            g = comp.transform.apply(g)
        if comp.gauge.is_indicator:
            violations.append(subgradient_violation(comp.gauge, x, g))
        else:
            violations.append(comp.weight * subgradient_violation(comp.gauge, x, g / comp.weight))
    if problem.quadratic_slack is not None:
        slack = parts[-1]
        violations.append(float(np.abs(2.0 * problem.quadratic_slack * slack - negated).max()))
    gap = float(np.linalg.norm(phi.apply(sum(parts)) - problem.observation))
    return KKTReport(violations=violations, feasibility_gap=gap)


@dataclass
class L0Solution:
    x: np.ndarray
    y: np.ndarray
    objective: float


L0_MAX_DIMENSION = 14


def _as_matrix(op):
    if hasattr(op, "matrix"):
        return np.asarray(op.matrix, dtype=float)
    d = op.in_shape[0]
    return np.column_stack([op.apply(col) for col in np.eye(d)])


def l0_oracle(z0, dict_y, lam, max_dim=L0_MAX_DIMENSION):
    """Globally minimize ``||x||_0 + lam ||D y||_0`` subject to ``x + y = z0``.

    Exhaustive search for tiny ``d``. With ``c = D y`` and ``B = D^{-1}``, an
    optimal pair with coefficient support ``T`` (``|T| = t``) has ``z0 - B c``
    vanishing on at least ``t`` rows where ``B[:, T]`` has full column rank
    (otherwise a coefficient could be zeroed at no cost), so ``c_T`` is
    pinned by some ``t x t`` row subsystem. We enumerate supports by
    increasing size, every row subset of that size, and stop once ``lam * t``
    alone cannot beat the incumbent.
    """
    z0 = np.asarray(z0, dtype=float)
    if z0.ndim != 1:
        raise ValueError("l0_oracle works on vectors")
    d = z0.size
    if d > max_dim:
        raise ValueError(f"l0_oracle refuses d = {d} > {max_dim} (exhaustive search)")
    if not lam > 0:
        raise ValueError("lam must be positive")
    dmat = _as_matrix(dict_y)
    if dmat.shape != (d, d):
        raise ValueError("dictionary must be square with the observation's size")
    inverse = dmat.T if dict_y.is_orthogonal else np.linalg.inv(dmat)
    tol = 1e-9 * max(1.0, float(np.abs(z0).max(initial=0.0)))

    def count(v):
        return int(np.count_nonzero(np.abs(v) > tol))

    best_obj = float(count(z0))
    best_x, best_c = z0.copy(), np.zeros(d)
    for t in range(1, d + 1):
        if lam * t >= best_obj:
            break
        for support in itertools.combinations(range(d), t):
            basis = inverse[:, support]
            for rows in itertools.combinations(range(d), t):
                sub = basis[rows, :]
                if abs(np.linalg.det(sub)) < 1e-12:
                    continue
                coef = np.linalg.solve(sub, z0[list(rows)])
                x = z0 - basis @ coef
                x[np.abs(x) <= tol] = 0.0
                obj = count(x) + lam * count(coef)
                if obj < best_obj - 1e-12:
                    best_obj = obj
                    best_x = x
                    best_c = np.zeros(d)
                    best_c[list(support)] = coef
    y = inverse @ best_c
    return L0Solution(x=best_x, y=y, objective=float(best_obj))
