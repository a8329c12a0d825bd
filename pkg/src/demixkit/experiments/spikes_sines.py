"""Separate impulses from cosines: ``min ||x||_1 + lam ||D y||_1  s.t.  x + y = z0``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..atoms import GaugeSpec
from ..geometry import gaussian_generator
from ..io import write_rows
from ..operators import Dct
from ..solvers import Component, DemixProblem, SolveResult, admm_demix
from ._common import relative_error

__all__ = ["SpikesSinesReport", "demo_spikes_sines", "spikes_sines_problem", "write_waveform_csv"]

WAVEFORM_HEADER = ("index", "z0", "x0", "y0", "x_hat", "y_hat")


@dataclass
class SpikesSinesReport:
    x0: np.ndarray
    y0: np.ndarray
    x_hat: np.ndarray
    y_hat: np.ndarray
    x_error: float
    y_error: float
    result: SolveResult

    @property
    def observation(self):
        return self.x0 + self.y0

    def recovered(self, tol=1e-3):
        return self.x_error <= tol and self.y_error <= tol


def spikes_sines_problem(z0, lam=1.0):
    d = np.asarray(z0).size
    return DemixProblem(
        observation=z0,
        components=[
            Component(GaugeSpec("L1", (d,))),
            Component(GaugeSpec("L1", (d,)), lam, Dct(d)),
        ],
    )


def demo_spikes_sines(d=128, s_spike=8, s_dct=8, seed=0, lam=1.0, opts=None):
    """Mix ``s_spike`` spikes with ``s_dct`` cosines and demix them.

    Spike positions and DCT frequencies are uniform without replacement;
    amplitudes are standard Gaussian.
    """
    if s_spike < 0 or s_dct < 0:
        raise ValueError("sparsities must be non-negative")
    if s_spike + s_dct > d / 4:
        raise ValueError(f"s_spike + s_dct = {s_spike + s_dct} exceeds d/4 = {d / 4}")
    rng = gaussian_generator(seed)
    x0 = np.zeros(d)
    x0[rng.choice(d, s_spike, replace=False)] = rng.standard_normal(s_spike)
    coeffs = np.zeros(d)
    coeffs[rng.choice(d, s_dct, replace=False)] = rng.standard_normal(s_dct)
    y0 = Dct(d).adjoint(coeffs)
    result = admm_demix(spikes_sines_problem(x0 + y0, lam), opts)
    x_hat, y_hat = result.components
    return SpikesSinesReport(
        x0=x0,
        y0=y0,
        x_hat=x_hat,
        y_hat=y_hat,
        x_error=relative_error(x_hat, x0),
        y_error=relative_error(y_hat, y0),
        result=result,
    )


def write_waveform_csv(report, path):
    rows = [
        (i, z, a, b, c, e)
        for i, (z, a, b, c, e) in enumerate(
            zip(report.observation, report.x0, report.y0, report.x_hat, report.y_hat)
        )
    ]
    write_rows(path, WAVEFORM_HEADER, rows)
