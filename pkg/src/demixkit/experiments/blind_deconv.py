"""Blind deconvolution by lifting: ``min ||X||_S1  s.t.  conv_lift(X) = x0 * y0``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..atoms import GaugeSpec, gauge_eval
from ..geometry import gaussian_generator
from ..operators import ConvLift
from ..solvers import Component, DemixProblem, SolveResult, SolverOptions, decomposition_demix

__all__ = ["BlindDeconvReport", "blind_deconv_problem", "demo_blind_deconv", "MAX_LENGTH"]

MAX_LENGTH = 32
DECONV_SOLVER = SolverOptions(max_iter=50000, primal_tol=1e-10, dual_tol=1e-10)


@dataclass
class BlindDeconvReport:
    x0: np.ndarray
    y0: np.ndarray
    observation: np.ndarray
    X: np.ndarray
    x_hat: np.ndarray
    y_hat: np.ndarray
    feasibility: float
    objective: float
    truth_objective: float
    result: SolveResult

    @property
    def relative_feasibility(self):
        return self.feasibility / max(np.linalg.norm(self.observation), 1e-300)


def blind_deconv_problem(z0, m, d):
    return DemixProblem(
        observation=np.asarray(z0, dtype=float),
        components=[Component(GaugeSpec("Schatten1", (m, d)))],
        measurement=ConvLift(m, d),
    )


def _top_pair(X):
    u, s, vt = np.linalg.svd(X)
    scale = np.sqrt(s[0])
    x_hat, y_hat = scale * u[:, 0], scale * vt[0]
    # the pair is only defined up to (x, y) -> (-x, -y)
    if x_hat[np.argmax(np.abs(x_hat))] < 0:
        x_hat, y_hat = -x_hat, -y_hat
    return x_hat, y_hat


def demo_blind_deconv(m=8, d=8, seed=0, x0=None, y0=None, opts=None):
    """Recover a rank-one lift of two signals from their convolution.

    Parameters
    ----------
    m, d : int
        Lengths of the two factors, each at most 32.
    seed : int
        Seed for the Gaussian factors when ``x0``/``y0`` are not given.
    x0, y0 : array_like, optional
        Explicit factors; override ``m`` and ``d``.
    opts : SolverOptions, optional

    Returns
    -------
    BlindDeconvReport
        ``x_hat, y_hat`` come from the top singular pair of ``X`` and are
        determined only up to the scaling ``(c x, y / c)``.
    """
    rng = gaussian_generator(seed)
    x0 = rng.standard_normal(m) if x0 is None else np.asarray(x0, dtype=float).ravel()
    y0 = rng.standard_normal(d) if y0 is None else np.asarray(y0, dtype=float).ravel()
    m, d = x0.size, y0.size
    if not (1 <= m <= MAX_LENGTH and 1 <= d <= MAX_LENGTH):
        raise ValueError(f"factor lengths must lie in [1, {MAX_LENGTH}], got {m} and {d}")
    z0 = np.convolve(x0, y0)
    problem = blind_deconv_problem(z0, m, d)
    result = decomposition_demix(problem, opts or DECONV_SOLVER)
    X = result.components[0]
    x_hat, y_hat = _top_pair(X)
    gauge = GaugeSpec("Schatten1", (m, d))
    return BlindDeconvReport(
        x0=x0,
        y0=y0,
        observation=z0,
        X=X,
        x_hat=x_hat,
        y_hat=y_hat,
        feasibility=float(np.linalg.norm(problem.measurement.apply(X) - z0)),
        objective=gauge_eval(gauge, X),
        truth_objective=gauge_eval(gauge, np.outer(x0, y0)),
        result=result,
    )
