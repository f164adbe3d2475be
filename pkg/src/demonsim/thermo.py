"""Estimator statistics and small thermodynamic closed forms.

Exponential averages of the kind <exp(beta W - i_qc)> concentrate on rare
samples, so the mean is computed in log space and its uncertainty by a
seeded bootstrap rather than a normal-theory formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import streams
from .qcore import thermal_qubit_population


class Method(Enum):
    PLAIN = "plain"
    BOOTSTRAP = "bootstrap"


@dataclass(frozen=True)
class EstimatorResult:
    """A point estimate with its standard error and provenance."""

    mean: float
    std_error: float
    n_samples: int
    method: Method

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if not self.std_error >= 0.0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")


def exp_average(samples, *, resamples: int = 1000, seed: int = 0) -> EstimatorResult:
    """Mean of exp(x) over the samples, with a bootstrap standard error.

    The samples are shifted by their maximum before exponentiating, so the
    result is exact up to floating point for any well-scaled input. All
    samples must be finite: trials flagged as absolutely irreversible carry
    no finite exponent and must be excluded (and counted) by the caller.

    The bootstrap uses its own deterministic stream derived from `seed`, so
    repeated calls on the same samples give identical error bars.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        x = x.reshape(-1)
    n = x.size
    if n == 0:
        raise ValueError("exp_average needs at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite; exclude flagged trials first")
    m = float(np.max(x))
    w = np.exp(x - m)
    scale = math.exp(m)
    mean = scale * float(np.mean(w))
    if n == 1:
        return EstimatorResult(mean=mean, std_error=0.0, n_samples=1, method=Method.BOOTSTRAP)
    rng = streams.trial_rng(seed, streams.BOOTSTRAP, 0)
    boot = np.empty(resamples, dtype=float)
    for r in range(resamples):
        idx = rng.integers(0, n, size=n)
        boot[r] = np.mean(w[idx])
    return EstimatorResult(
        mean=mean,
        std_error=scale * float(np.std(boot, ddof=1)),
        n_samples=n,
        method=Method.BOOTSTRAP,
    )


def average_information(samples) -> EstimatorResult:
    """Sample mean of the information weights with the usual standard error."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    n = x.size
    if n == 0:
        raise ValueError("average_information needs at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite; exclude flagged trials first")
    err = 0.0 if n == 1 else float(np.std(x, ddof=1)) / math.sqrt(n)
    return EstimatorResult(mean=float(np.mean(x)), std_error=err, n_samples=n, method=Method.PLAIN)


def shannon_entropy_thermal(beta_homega: float) -> float:
    """Entropy (nats) of a two-level thermal distribution at beta hbar omega.

    Tends to ln 2 as beta_homega -> 0 and to 0 in the cold limit.
    """
    if not beta_homega > 0.0:
        raise ValueError(f"beta_homega must be > 0, got {beta_homega}")
    p = thermal_qubit_population(beta_homega)
    out = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            out -= q * math.log(q)
    return out


@dataclass(frozen=True, eq=False)
class WorkHistogram:
    """Binned work samples: edges of length len(counts) + 1, counts >= 0."""

    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=int)
        if edges.ndim != 1 or counts.ndim != 1 or edges.size != counts.size + 1:
            raise ValueError(
                f"need len(bin_edges) = len(counts) + 1, got {edges.size} and {counts.size}"
            )
        if np.any(np.diff(edges) <= 0.0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def n_samples(self) -> int:
        return int(np.sum(self.counts))


def work_histogram(samples, bins: int = 50) -> WorkHistogram:
    counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins)
    return WorkHistogram(bin_edges=edges, counts=counts)
