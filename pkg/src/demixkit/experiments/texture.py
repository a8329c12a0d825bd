"""Low-rank texture plus sparse occlusion: ``min ||X||_S1 + lam ||Y||_1  s.t.  X + Y = Z0``."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..atoms import GaugeSpec
from ..geometry import gaussian_generator
from ..io import read_pgm, to_gray, write_pgm
from ..solvers import Component, DemixProblem, SolveResult, SolverOptions, admm_demix
from ._common import relative_error

__all__ = ["SyntheticTexture", "TextureReport", "demo_texture", "checkerboard"]

MAX_SIDE = 512


def checkerboard(rows, cols, block):
    """0/1 chessboard with ``block``-pixel squares; rank 2 (constant + rank one)."""
    u = np.where((np.arange(rows) // block) % 2 == 0, 1.0, -1.0)
    v = np.where((np.arange(cols) // block) % 2 == 0, 1.0, -1.0)
    return 0.5 + 0.5 * np.outer(u, v)


@dataclass(frozen=True)
class SyntheticTexture:
    """A checkerboard with a fraction of pixels hit by +/- ``magnitude`` spikes."""

    size: int = 32
    block: int = 4
    corruption: float = 0.05
    magnitude: float = 3.0
    seed: int = 0

    def generate(self):
        texture = checkerboard(self.size, self.size, self.block)
        rng = gaussian_generator(self.seed)
        count = int(round(self.corruption * texture.size))
        occlusion = np.zeros(texture.size)
        where = rng.choice(texture.size, count, replace=False)
        occlusion[where] = self.magnitude * rng.choice([-1.0, 1.0], count)
        occlusion = occlusion.reshape(texture.shape)
        return texture + occlusion, texture, occlusion


@dataclass
class TextureReport:
    observation: np.ndarray
    low_rank: np.ndarray
    sparse: np.ndarray
    lam: float
    result: SolveResult
    low_rank_error: float = float("nan")
    sparse_error: float = float("nan")
    rank: int = 0


def _load(image):
    if isinstance(image, SyntheticTexture):
        return image.generate()
    if isinstance(image, (str, os.PathLike)):
        return read_pgm(image).astype(float) / 255.0, None, None
    return np.asarray(image, dtype=float), None, None


def demo_texture(image=None, lam=None, opts=None, out_dir=None):
    """Split an image into low-rank and sparse parts.

    ``image`` is an array, a PGM path or a :class:`SyntheticTexture`
    (default). ``lam`` defaults to ``1/sqrt(max(m, n))``. When ``out_dir``
    is given the observation and both parts are written there as PGM files.
    """
    observation, truth_low, truth_sparse = _load(SyntheticTexture() if image is None else image)
    if observation.ndim != 2:
        raise ValueError("image must be two-dimensional")
    rows, cols = observation.shape
    if max(rows, cols) > MAX_SIDE:
        raise ValueError(f"image larger than {MAX_SIDE}x{MAX_SIDE}")
    lam = 1.0 / np.sqrt(max(rows, cols)) if lam is None else float(lam)
    problem = DemixProblem(
        observation=observation,
        components=[Component(GaugeSpec("Schatten1", (rows, cols))), Component(GaugeSpec("L1", (rows, cols)), lam)],
    )
    result = admm_demix(problem, opts or SolverOptions(max_iter=20000))
    low, sparse = result.components
    report = TextureReport(observation=observation, low_rank=low, sparse=sparse, lam=lam, result=result)
    sv = np.linalg.svd(low, compute_uv=False)
    report.rank = int(np.sum(sv > 1e-6 * max(1.0, sv[0] if sv.size else 0.0)))
    if truth_low is not None:
        report.low_rank_error = relative_error(low, truth_low)
        report.sparse_error = relative_error(sparse, truth_sparse)
    if out_dir is not None:
        lo, hi = float(observation.min()), float(observation.max())
        write_pgm(os.path.join(out_dir, "observation.pgm"), to_gray(observation, lo, hi))
        write_pgm(os.path.join(out_dir, "low_rank.pgm"), to_gray(low, lo, hi))
        write_pgm(os.path.join(out_dir, "sparse.pgm"), to_gray(sparse, lo, hi))
    return report
