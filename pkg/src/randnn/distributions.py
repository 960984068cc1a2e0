"""Weight distributions for random layers, and their text form (``uniform(-1,1)``)."""

import re
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Uniform:
    low: float = -1.0
    high: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.low) and np.isfinite(self.high)) or self.low >= self.high:
            raise ValueError(f"uniform bounds must satisfy low < high, got ({self.low}, {self.high})")

    def sample(self, rng, shape):
        return rng.uniform(self.low, self.high, size=shape)

    def __str__(self):
        return f"uniform({self.low:g},{self.high:g})"


@dataclass(frozen=True)
class Gaussian:
    sigma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"gaussian sigma must be positive, got {self.sigma}")

    def sample(self, rng, shape):
        return rng.normal(0.0, self.sigma, size=shape)

    def __str__(self):
        return f"gaussian({self.sigma:g})"


_PATTERN = re.compile(r"^\s*(uniform|gaussian)\s*\(([^)]*)\)\s*$")


def parse_distribution(text):
    """Parse ``uniform(a,b)`` or ``gaussian(sigma)``; pass through instances."""
    if isinstance(text, (Uniform, Gaussian)):
        return text
    m = _PATTERN.match(str(text))
    if m is None:
        raise ValueError(f"cannot parse distribution {text!r}")
    kind, args = m.group(1), [a for a in m.group(2).split(",") if a.strip()]
    try:
        values = [float(a) for a in args]
    except ValueError as exc:
        raise ValueError(f"non-numeric distribution parameter in {text!r}") from exc
    if kind == "uniform":
        if len(values) != 2:
            raise ValueError("uniform takes two parameters")
        return Uniform(*values)
    if len(values) != 1:
        raise ValueError("gaussian takes one parameter")
    return Gaussian(values[0])


def derive_seed(seed, index):
    """Seed for the ``index``-th component; index 0 returns ``seed`` itself."""
    if index == 0:
        return int(seed)
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])
