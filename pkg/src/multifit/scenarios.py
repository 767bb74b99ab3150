"""Seeded simulation scenarios.

Each generator consumes its PCG64 stream in a fixed, documented order (one
whole vector per named variable), so a (name, n, noise_level, seed) tuple
pins the output bit for bit on a given platform.  Discrete variables are
drawn by inverse CDF on a single uniform each, in column order.

Noise levels are integers l in 1..20 mapping to a normal s.d. of l/20.
The two fixed-noise example scenarios (rotated_circle, superimposed_sine)
take a direct ``noise_sd`` instead, defaulting to 0.1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoiseLevelOutOfRangeError, UnknownScenarioError
from .preprocess import DataMatrix

RNG_NAME = "numpy-pcg64"

TABLE_SCENARIOS = ("sin", "circular", "checkerboard", "linear", "parabolic", "local")
SCENARIO_NAMES = TABLE_SCENARIOS + (
    "highdim_linear",
    "rotated_circle",
    "superimposed_sine",
    "null_gaussian",
)

# Sample sizes the power study grid uses when none is given.
DEFAULT_N = {
    "sin": 300,
    "circular": 300,
    "checkerboard": 500,
    "linear": 300,
    "parabolic": 300,
    "local": 1000,
    "highdim_linear": 300,
    "rotated_circle": 800,
    "superimposed_sine": 600,
    "null_gaussian": 100,
}


@dataclass(slots=True)
class ScenarioSpec:
    """One simulation cell: scenario name, size, noise, dimensions, seed."""

    name: str
    n: int
    noise_level: int | None = None
    d_x: int | None = None
    d_y: int | None = None
    seed: int = 0
    noise_sd: float | None = None

    def __post_init__(self) -> None:
        if self.name not in SCENARIO_NAMES:
            raise UnknownScenarioError(self.name)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.noise_level is not None and not (
            isinstance(self.noise_level, (int, np.integer))
            and 1 <= self.noise_level <= 20
        ):
            raise NoiseLevelOutOfRangeError(self.noise_level)
        if self.name in TABLE_SCENARIOS and self.noise_level is None:
            raise NoiseLevelOutOfRangeError(None)

    @property
    def sigma(self) -> float:
        level = 3 if self.noise_level is None else self.noise_level
        return level / 20.0

    @property
    def fixed_sd(self) -> float:
        return 0.1 if self.noise_sd is None else self.noise_sd

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "noise_level": self.noise_level,
            "d_x": self.d_x,
            "d_y": self.d_y,
            "seed": self.seed,
            "noise_sd": self.noise_sd,
            "rng": RNG_NAME,
        }


def _matrix(x_cols, y_cols) -> DataMatrix:
    cols = list(x_cols) + list(y_cols)
    return DataMatrix(
        np.column_stack(cols),
        x_dims=tuple(range(len(x_cols))),
        y_dims=tuple(range(len(x_cols), len(cols))),
    )


def _multi_bern(u: np.ndarray, values) -> np.ndarray:
    """Inverse CDF of a uniform categorical on `values` from one uniform."""
    idx = np.minimum((u * len(values)).astype(np.int64), len(values) - 1)
    return np.asarray(values, dtype=np.float64)[idx]


def _sin(spec, rng):
    # Draw order: Z, Z', U, eps.
    z = rng.standard_normal(spec.n)
    zp = rng.standard_normal(spec.n)
    u = rng.random(spec.n)
    eps = rng.standard_normal(spec.n) * spec.sigma
    y2 = np.sin(5 * math.pi * u) + 4 * eps
    return _matrix([z, u], [zp, y2])


def _circular(spec, rng):
    # Draw order: Z, Z', theta, eps, eps'.
    z = rng.standard_normal(spec.n)
    zp = rng.standard_normal(spec.n)
    theta = rng.uniform(-math.pi, math.pi, spec.n)
    eps = rng.standard_normal(spec.n) * spec.sigma
    epsp = rng.standard_normal(spec.n) * spec.sigma
    return _matrix([z, np.cos(theta) + eps], [zp, np.sin(theta) + epsp])


def _checkerboard(spec, rng):
    # Draw order: Z, Z', uW, uV1, uV2, eps, eps'.
    z = rng.standard_normal(spec.n)
    zp = rng.standard_normal(spec.n)
    w = _multi_bern(rng.random(spec.n), (1, 2, 3, 4, 5))
    v1 = _multi_bern(rng.random(spec.n), (1, 3, 5))
    v2 = _multi_bern(rng.random(spec.n), (2, 4))
    eps = rng.standard_normal(spec.n) * spec.sigma
    epsp = rng.standard_normal(spec.n) * spec.sigma
    x2 = w + eps
    y2 = np.where(w.astype(np.int64) % 2 == 1, v1, v2) + epsp
    return _matrix([z, x2], [zp, y2])


def _linear(spec, rng):
    # Draw order: Z, Z', U, eps.
    z = rng.standard_normal(spec.n)
    zp = rng.standard_normal(spec.n)
    u = rng.random(spec.n)
    eps = rng.standard_normal(spec.n) * spec.sigma
    return _matrix([z, u], [zp, u + 3 * eps])


def _parabolic(spec, rng):
    # Draw order: Z, Z', U, eps.
    z = rng.standard_normal(spec.n)
    zp = rng.standard_normal(spec.n)
    u = rng.random(spec.n)
    eps = rng.standard_normal(spec.n) * spec.sigma
    return _matrix([z, u], [zp, (u - 0.5) ** 2 + 0.75 * eps])


def _local(spec, rng):
    # Draw order: Z, Z', Z'', Z''', eps.  The signal lives only where
    # X2 > 0 and Z''' < 0.7; elsewhere Y2 is the independent Z'''.
    z = rng.standard_normal(spec.n)
    zp = rng.standard_normal(spec.n)
    zpp = rng.standard_normal(spec.n)
    zppp = rng.standard_normal(spec.n)
    eps = rng.standard_normal(spec.n) * spec.sigma
    x2 = zpp
    y2 = np.where((x2 > 0) & (zppp < 0.7), x2 + eps / 6.0, zppp)
    return _matrix([z, x2], [zp, y2])


def _highdim_linear(spec, rng):
    # Draw order: X normals (n x (d_x - 1), row major), U, Y normals, eps.
    d_x = spec.d_x or 40
    d_y = spec.d_y or 40
    if d_x < 2 or d_y < 2:
        raise ValueError("highdim_linear needs d_x, d_y >= 2")
    xs = rng.standard_normal((spec.n, d_x - 1))
    u = rng.random(spec.n)
    ys = rng.standard_normal((spec.n, d_y - 1))
    eps = rng.standard_normal(spec.n) * spec.sigma
    x_cols = [xs[:, c] for c in range(d_x - 1)] + [u]
    y_cols = [ys[:, c] for c in range(d_y - 1)] + [u + 3 * eps]
    return _matrix(x_cols, y_cols)


def _rotated_circle(spec, rng):
    # Draw order: X1, X2, Y1, Y2, theta, eps, eps'.  A noisy unit circle in
    # (X3, Y3) is rotated by pi/4 in the (X2, X3) plane, leaving Y3 alone.
    sd = spec.fixed_sd
    x1 = rng.standard_normal(spec.n)
    x2 = rng.standard_normal(spec.n)
    y1 = rng.standard_normal(spec.n)
    y2 = rng.standard_normal(spec.n)
    theta = rng.uniform(-math.pi, math.pi, spec.n)
    eps = rng.standard_normal(spec.n) * sd
    epsp = rng.standard_normal(spec.n) * sd
    x3 = np.cos(theta) + eps
    y3 = np.sin(theta) + epsp
    c = math.cos(math.pi / 4)
    s = math.sin(math.pi / 4)
    x2r = c * x2 - s * x3
    x3r = s * x2 + c * x3
    return _matrix([x1, x2r, x3r], [y1, y2, y3])


def _superimposed_sine(spec, rng):
    # Draw order: X1, X2, eps.  X2 picks which of two sine frequencies
    # generated Y.
    sd = spec.fixed_sd
    x1 = rng.random(spec.n)
    x2 = rng.beta(0.3, 0.3, spec.n)
    eps = rng.standard_normal(spec.n) * sd
    y = np.where(x2 > 0.5, np.sin(10 * x1), np.sin(40 * x1)) + eps
    return _matrix([x1, x2], [y])


def _null_gaussian(spec, rng):
    # Draw order: one (n x D) normal matrix, row major.
    d_x = spec.d_x or 2
    d_y = spec.d_y or 2
    mat = rng.standard_normal((spec.n, d_x + d_y))
    return _matrix([mat[:, c] for c in range(d_x)],
                   [mat[:, d_x + c] for c in range(d_y)])


_GENERATORS = {
    "sin": _sin,
    "circular": _circular,
    "checkerboard": _checkerboard,
    "linear": _linear,
    "parabolic": _parabolic,
    "local": _local,
    "highdim_linear": _highdim_linear,
    "rotated_circle": _rotated_circle,
    "superimposed_sine": _superimposed_sine,
    "null_gaussian": _null_gaussian,
}


def generate(spec: ScenarioSpec) -> DataMatrix:
    """Generate one dataset; identical specs give bit-identical matrices."""
    rng = np.random.default_rng(spec.seed)
    return _GENERATORS[spec.name](spec, rng)
