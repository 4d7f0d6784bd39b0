"""Hyperedge-cardinality laws: constant, truncated Poisson, empirical.

Each law is immutable after construction and exposes its mean, variance,
pmf and a sampler driven by a caller-supplied uniform generator.  Table
laws (truncated Poisson, empirical) sample by inverse CDF and consume
exactly one uniform per draw; the constant law consumes none.  This draw
accounting is part of the reproducibility contract of the growth process.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ConfigError

# CDF tables stop once this much mass is covered; draws landing beyond the
# table are clamped to its last entry.
_TABLE_MASS = 1.0 - 1e-15


class CardinalityLaw:
    """Common interface: integer sizes >= 1 with finite mean and variance."""

    #: "constant" or "table"; the growth kernel switches on this.
    kind: str = "table"

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def pmf(self, k: int) -> float:
        raise NotImplementedError

    def max_size(self) -> int:
        """Largest size the sampler can produce."""
        raise NotImplementedError

    def sampling_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(support, cdf) arrays for inverse-CDF sampling; table laws only."""
        raise NotImplementedError

    def sample(self, rng) -> int:
        """One draw; table laws consume exactly one uniform from `rng`."""
        support, cdf = self.sampling_table()
        u = rng.random()
        i = int(np.searchsorted(cdf, u, side="right"))
        if i >= len(support):
            i = len(support) - 1
        return int(support[i])

    def sample_many(self, rng, n: int) -> np.ndarray:
        """n draws, identical to n successive calls of `sample`."""
        support, cdf = self.sampling_table()
        us = np.array([rng.random() for _ in range(n)])
        idx = np.minimum(np.searchsorted(cdf, us, side="right"), len(support) - 1)
        return support[idx]

    @staticmethod
    def _check_size(k: int) -> None:
        if k <= 0:
            raise ValueError("hyperedge sizes are integers >= 1")


class Constant(CardinalityLaw):
    """Every hyperedge has the same cardinality m >= 1."""

    kind = "constant"

    def __init__(self, m: int):
        if m < 1 or int(m) != m:
            raise ConfigError("constant cardinality must be an integer >= 1")
        self.m = int(m)

    def mean(self) -> float:
        return float(self.m)

    def variance(self) -> float:
        return 0.0

    def pmf(self, k: int) -> float:
        self._check_size(k)
        return 1.0 if k == self.m else 0.0

    def max_size(self) -> int:
        return self.m

    def sample(self, rng) -> int:
        return self.m

    def sample_many(self, rng, n: int) -> np.ndarray:
        return np.full(n, self.m, dtype=np.int64)

    def __repr__(self) -> str:
        return f"Constant({self.m})"


class TruncatedPoisson(CardinalityLaw):
    """Poisson(lam) conditioned on being >= 1.

    pmf(k) = lam^k / ((e^lam - 1) k!) for k >= 1; mean lam / (1 - e^-lam).
    """

    def __init__(self, lam: float):
        if not (lam > 0.0 and math.isfinite(lam)):
            raise ConfigError("truncated Poisson rate must be positive and finite")
        self.lam = float(lam)
        self._support, self._cdf = self._build_table(self.lam)

    @staticmethod
    def _build_table(lam: float) -> tuple[np.ndarray, np.ndarray]:
        # Forward accumulation p_{k+1} = p_k * lam / (k+1), capped once the
        # CDF exceeds the table mass so the loop is bounded.
        probs = []
        p = lam / math.expm1(lam)
        c = 0.0
        k = 1
        while True:
            c += p
            probs.append(c)
            if c > _TABLE_MASS:
                break
            k += 1
            p *= lam / k
        support = np.arange(1, len(probs) + 1, dtype=np.int64)
        return support, np.array(probs, dtype=np.float64)

    def mean(self) -> float:
        return self.lam / (-math.expm1(-self.lam))

    def variance(self) -> float:
        mu = self.mean()
        # E[Y(Y-1)] = lam^2 / (1 - e^-lam) = lam * mu
        return self.lam * mu + mu - mu * mu

    def pmf(self, k: int) -> float:
        self._check_size(k)
        log_norm = self.lam + math.log(-math.expm1(-self.lam)) if self.lam > 700 else math.log(math.expm1(self.lam))
        return math.exp(k * math.log(self.lam) - math.lgamma(k + 1) - log_norm)

    def max_size(self) -> int:
        return int(self._support[-1])

    def sampling_table(self) -> tuple[np.ndarray, np.ndarray]:
        return self._support, self._cdf

    def __repr__(self) -> str:
        return f"TruncatedPoisson({self.lam})"


class Empirical(CardinalityLaw):
    """Law given by a histogram {size: count} of observed hyperedge sizes."""

    def __init__(self, histogram: dict[int, int]):
        if not histogram:
            raise ConfigError("empirical histogram must be non-empty")
        for k, c in histogram.items():
            if int(k) != k or k < 1:
                raise ConfigError(f"empirical size {k!r} is not an integer >= 1")
            if int(c) != c or c < 1:
                raise ConfigError(f"count for size {k} must be a positive integer")
        max_k = max(histogram)
        counts = np.zeros(max_k + 1, dtype=np.int64)
        for k, c in histogram.items():
            counts[int(k)] += int(c)
        self._counts = counts
        self._total = int(counts.sum())
        self._support = np.nonzero(counts)[0].astype(np.int64)
        self._cdf = np.cumsum(counts[self._support]) / self._total

    @property
    def histogram(self) -> dict[int, int]:
        return {int(k): int(self._counts[k]) for k in self._support}

    def mean(self) -> float:
        sizes = np.arange(len(self._counts), dtype=np.int64)
        return int((sizes * self._counts).sum()) / self._total

    def variance(self) -> float:
        sizes = np.arange(len(self._counts), dtype=np.int64)
        m2 = int((sizes * sizes * self._counts).sum()) / self._total
        mu = self.mean()
        return m2 - mu * mu

    def pmf(self, k: int) -> float:
        self._check_size(k)
        if k >= len(self._counts):
            return 0.0
        return int(self._counts[k]) / self._total

    def max_size(self) -> int:
        return int(self._support[-1])

    def sampling_table(self) -> tuple[np.ndarray, np.ndarray]:
        return self._support, self._cdf

    def __repr__(self) -> str:
        return f"Empirical(<{len(self._support)} sizes, mean {self.mean():.4f}>)"


def from_sizes_file(path: str | Path) -> Empirical:
    """Load an empirical law from a text file.

    Accepts either one observed size per line or two-column "size,count"
    rows; the format is auto-detected from the first data line.  Blank
    lines are ignored; anything unparsable raises ConfigError naming the
    offending line.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    histogram: dict[int, int] = {}
    two_column: bool | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if two_column is None:
            two_column = "," in line
        parts = line.split(",") if two_column else [line]
        if two_column and len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 'size,count', got {raw!r}")
        try:
            values = [int(p.strip()) for p in parts]
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: non-integer entry {raw!r}") from None
        size = values[0]
        count = values[1] if two_column else 1
        if size < 1:
            raise ConfigError(f"{path}:{lineno}: sizes must be >= 1, got {size}")
        if count < 1:
            raise ConfigError(f"{path}:{lineno}: counts must be >= 1, got {count}")
        histogram[size] = histogram.get(size, 0) + count
    if not histogram:
        raise ConfigError(f"{path}: no hyperedge sizes found")
    return Empirical(histogram)
