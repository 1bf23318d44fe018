"""Seed derivation and random scenario generation for the Euclidean runs.

Ideal points come either from the uniform distribution over the 200x200
square or from a per-instance Gaussian mixture whose parameters are
themselves sampled (means uniform in the square, per-component standard
deviation uniform in [0, 50), flat-Dirichlet weights).  Each repetition of
a configuration draws a fresh instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spaces import Point2D

COORD_RANGE = 200.0
GMM_STD_RANGE = 50.0
NOISE_STD_RANGE = 10.0
_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One splitmix64 round; the standard 64-bit mixing function."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master_seed: int, config_index: int, rep_index: int) -> int:
    """Per-run 64-bit seed: splitmix64 chained over the identifying triple.

    ``run_seed = mix(mix(mix(master) ^ config_index) ^ rep_index)`` — stated
    here so alternative implementations can reproduce identical streams.
    """
    h = _splitmix64(master_seed & _MASK64)
    h = _splitmix64(h ^ (config_index & _MASK64))
    return _splitmix64(h ^ (rep_index & _MASK64))


@dataclass(frozen=True)
class GmmSpec:
    """Sampled mixture parameters; ``peaks == 0`` denotes the uniform law."""

    peaks: int
    means: tuple[Point2D, ...]
    stds: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if self.peaks < 0:
            raise ValueError("peaks must be >= 0")
        if len(self.means) != self.peaks or len(self.stds) != self.peaks or len(self.weights) != self.peaks:
            raise ValueError("component lists must have length == peaks")
        if self.peaks > 0:
            if any(w < 0 for w in self.weights):
                raise ValueError("weights must be non-negative")
            if abs(sum(self.weights) - 1.0) > 1e-12:
                raise ValueError("weights must sum to 1")


UNIFORM_SPEC = GmmSpec(0, (), (), ())


def sample_gmm_spec(peaks: int, rng: np.random.Generator) -> GmmSpec:
    """Draw mixture parameters for a fresh instance.

    Draw order: all means (x then y per component), all stds, then the
    flat Dirichlet weights via normalised unit-rate exponentials.
    """
    if peaks == 0:
        return UNIFORM_SPEC
    means = tuple(
        Point2D(rng.uniform(0.0, COORD_RANGE), rng.uniform(0.0, COORD_RANGE))
        for _ in range(peaks)
    )
    stds = tuple(float(rng.uniform(0.0, GMM_STD_RANGE)) for _ in range(peaks))
    raw = rng.exponential(1.0, peaks)
    weights = tuple(float(w) for w in raw / raw.sum())
    return GmmSpec(peaks, means, stds, weights)


def sample_status_quo(rng: np.random.Generator) -> Point2D:
    """Status quo uniform over the square (x drawn before y)."""
    return Point2D(rng.uniform(0.0, COORD_RANGE), rng.uniform(0.0, COORD_RANGE))


def sample_ideal_points(n: int, gmm: GmmSpec, rng: np.random.Generator) -> list[Point2D]:
    """n ideal points, uniform or from the mixture.

    Mixture draw order per point: one uniform for the component choice,
    then the x and y offsets (shared per-component std on both axes).
    """
    if gmm.peaks == 0:
        return [
            Point2D(rng.uniform(0.0, COORD_RANGE), rng.uniform(0.0, COORD_RANGE))
            for _ in range(n)
        ]
    cum = np.cumsum(gmm.weights)
    points = []
    for _ in range(n):
        u = rng.random()
        comp = int(np.searchsorted(cum, u, side="right"))
        comp = min(comp, gmm.peaks - 1)
        mean = gmm.means[comp]
        std = gmm.stds[comp]
        points.append(Point2D(rng.normal(mean.x, std), rng.normal(mean.y, std)))
    return points


def perturb_init(ideal: Point2D, rng: np.random.Generator) -> Point2D:
    """Noisy singleton start: per-agent axis deviations drawn uniformly from
    [0, 10), then a zero-mean Gaussian offset per axis."""
    sx = rng.uniform(0.0, NOISE_STD_RANGE)
    sy = rng.uniform(0.0, NOISE_STD_RANGE)
    return Point2D(ideal.x + rng.normal(0.0, sx), ideal.y + rng.normal(0.0, sy))
