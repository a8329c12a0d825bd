"""Direction-of-arrival estimation with a demixed source covariance.

The array is a half-wavelength uniform linear array of ``n/2`` elements,
embedded in ``R^n`` by stacking the real and imaginary parts of the complex
steering vector. Sources have real Gaussian amplitudes, so the source
covariance ``A0 A0^T`` has rank ``r``. Sensor noise is independent across
sensors with log-uniformly spread variances (geometric centre 1).

The empirical covariance ``Z0`` is demixed by::

    minimize ||X||_{S1+} + ||Y||_diag + lam ||E||_F^2   s.t.  X + Y + E = Z0

and MUSIC is run on both ``Z0`` and the estimate ``X``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..atoms import GaugeSpec
from ..exceptions import NumericalError
from ..geometry import gaussian_generator
from ..solvers import Component, DemixProblem, SolveResult, SolverOptions, decomposition_demix

__all__ = [
    "DoaScenario",
    "DoaReport",
    "DoaStudy",
    "steering_matrix",
    "simulate_covariance",
    "music_spectrum",
    "music_peaks",
    "bearing_errors",
    "demo_doa",
    "doa_study",
    "MUSIC_GRID",
]

MUSIC_GRID = np.round(np.arange(-90.0, 90.0 + 0.25, 0.5), 10)
DOA_SOLVER = SolverOptions(max_iter=20000, primal_tol=1e-8, dual_tol=1e-8)


@dataclass(frozen=True)
class DoaScenario:
    """Array size, sources and noise for one simulated experiment.

    ``snapshots=None`` uses the exact (infinite-snapshot) covariance;
    ``snr_db=inf`` removes the noise. SNR is the per-sensor signal power over
    the reference noise variance 1.
    """

    n: int = 10
    r: int = 2
    bearings: tuple = (-10.0, 15.0)
    snapshots: int | None = 200
    snr_db: float = 5.0
    seed: int = 0
    noise_spread_db: float = 40.0

    def __post_init__(self):
        object.__setattr__(self, "bearings", tuple(float(b) for b in self.bearings))
        if self.n < 2 or self.n % 2:
            raise ValueError("n must be a positive even number (real/imag stacking)")
        if not 1 <= self.r < self.n:
            raise ValueError("need 1 <= r < n")
        if len(self.bearings) != self.r:
            raise ValueError("one bearing per source")
        if any(not -90.0 < b < 90.0 for b in self.bearings):
            raise ValueError("bearings must lie in (-90, 90) degrees")
        if self.snapshots is not None and self.snapshots < 1:
            raise ValueError("snapshots must be positive")
        if self.noise_spread_db < 0:
            raise ValueError("noise_spread_db must be non-negative")

    @property
    def source_variance(self):
        # per-sensor signal power is variance * ||a||^2 / n = variance / 2
        if math.isinf(self.snr_db):
            return 1.0
        return 2.0 * 10.0 ** (self.snr_db / 10.0)


def steering_matrix(n, bearings_deg):
    """Real steering vectors as columns, shape ``(n, len(bearings))``."""
    theta = np.deg2rad(np.atleast_1d(np.asarray(bearings_deg, dtype=float)))
    phase = np.pi * np.arange(n // 2)[:, None] * np.sin(theta)[None, :]
    return np.vstack([np.cos(phase), np.sin(phase)])


def simulate_covariance(scenario):
    """Return ``(Z0, X0, noise_variances)`` for ``scenario``."""
    rng = gaussian_generator(scenario.seed)
    n, r = scenario.n, scenario.r
    steering = steering_matrix(n, scenario.bearings)
    power = scenario.source_variance
    if math.isinf(scenario.snr_db):
        variances = np.zeros(n)
    else:
        spread = scenario.noise_spread_db / 20.0
        variances = 10.0 ** rng.uniform(-spread, spread, n)
    source_cov = power * steering @ steering.T
    if scenario.snapshots is None:
        return source_cov + np.diag(variances), source_cov, variances
    amplitudes = math.sqrt(power) * rng.standard_normal((r, scenario.snapshots))
    noise = np.sqrt(variances)[:, None] * rng.standard_normal((n, scenario.snapshots))
    data = steering @ amplitudes + noise
    return data @ data.T / scenario.snapshots, source_cov, variances


def music_spectrum(cov, r, grid=MUSIC_GRID):
    """MUSIC pseudospectrum ``1 / ||E_n^T a(theta)||^2`` over ``grid`` (degrees)."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    try:
        _, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigendecomposition failed in MUSIC", shape=cov.shape) from exc
    noise_space = vecs[:, : n - r]
    proj = noise_space.T @ steering_matrix(n, grid)
    with np.errstate(divide="ignore"):
        return 1.0 / np.einsum("ij,ij->j", proj, proj)


def music_peaks(spectrum, r, grid=MUSIC_GRID):
    """Bearings of the ``r`` largest local maxima, sorted ascending.

    With fewer than ``r`` local maxima the largest one is repeated.
    """
    p = np.asarray(spectrum, dtype=float)
    # an endpoint counts only when it beats its single neighbour
    left = np.concatenate([p[1:2], p[:-1]])
    right = np.concatenate([p[1:], p[-2:-1]])
    peaks = np.nonzero((p > left) & (p >= right))[0]
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(p))])
    order = peaks[np.argsort(-p[peaks], kind="stable")][:r]
    chosen = list(order) + [order[0]] * (r - order.size)
    return np.sort(np.asarray(grid)[chosen])


def bearing_errors(estimates, truth):
    """Absolute errors after matching sorted estimates to sorted true bearings."""
    return np.abs(np.sort(np.asarray(estimates)) - np.sort(np.asarray(truth)))


@dataclass
class DoaReport:
    scenario: DoaScenario
    covariance: np.ndarray
    source_covariance: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    E: np.ndarray
    result: SolveResult
    spectrum_raw: np.ndarray
    spectrum_demixed: np.ndarray
    estimates_raw: np.ndarray
    estimates_demixed: np.ndarray
    errors_raw: np.ndarray = field(default=None)
    errors_demixed: np.ndarray = field(default=None)

    def rows(self):
        truth = np.sort(np.asarray(self.scenario.bearings))
        out = []
        for method, est, err in (
            ("raw", self.estimates_raw, self.errors_raw),
            ("demixed", self.estimates_demixed, self.errors_demixed),
        ):
            for t, e, de in zip(truth, est, err):
                out.append((method, t, e, de))
        return out


def demo_doa(scenario=None, lam=1.0, opts=None):
    """Simulate ``scenario``, demix its covariance and compare MUSIC bearings."""
    scenario = scenario or DoaScenario()
    cov, source_cov, _ = simulate_covariance(scenario)
    n, r = scenario.n, scenario.r
    problem = DemixProblem(
        observation=cov,
        components=[
            Component(GaugeSpec("PsdTrace", (n, n))),
            Component(GaugeSpec("DiagIndicator", (n, n))),
        ],
        quadratic_slack=lam,
    )
    result = decomposition_demix(problem, opts or DOA_SOLVER)
    X, Y, E = result.components
    spec_raw = music_spectrum(cov, r)
    spec_dem = music_spectrum(X, r)
    est_raw = music_peaks(spec_raw, r)
    est_dem = music_peaks(spec_dem, r)
    return DoaReport(
        scenario=scenario,
        covariance=cov,
        source_covariance=source_cov,
        X=X,
        Y=Y,
        E=E,
        result=result,
        spectrum_raw=spec_raw,
        spectrum_demixed=spec_dem,
        estimates_raw=est_raw,
        estimates_demixed=est_dem,
        errors_raw=bearing_errors(est_raw, scenario.bearings),
        errors_demixed=bearing_errors(est_dem, scenario.bearings),
    )


@dataclass
class DoaStudy:
    """Pooled bearing errors over many seeds."""

    snr_db: float
    errors_raw: np.ndarray
    errors_demixed: np.ndarray
    reports: list

    @property
    def median_raw(self):
        return float(np.median(self.errors_raw))

    @property
    def median_demixed(self):
        return float(np.median(self.errors_demixed))

    def fraction_off(self, threshold=3.0):
        """Fractions of raw and demixed estimates more than ``threshold`` degrees off."""
        return (
            float(np.mean(self.errors_raw > threshold)),
            float(np.mean(self.errors_demixed > threshold)),
        )


def doa_study(snr_db, seeds=range(50), lam=1.0, opts=None, **scenario_kwargs):
    reports = [
        demo_doa(DoaScenario(snr_db=snr_db, seed=seed, **scenario_kwargs), lam, opts)
        for seed in seeds
    ]
    return DoaStudy(
        snr_db=snr_db,
        errors_raw=np.concatenate([rep.errors_raw for rep in reports]),
        errors_demixed=np.concatenate([rep.errors_demixed for rep in reports]),
        reports=reports,
    )
