"""Empirical quantities derived from run traces.

Degree histograms split by activity, tail distributions, log-binned
densities, least-squares slopes of trajectories, ensemble concentration
diagnostics, and maximum-likelihood fitting of the discrete power law
with exponential cutoff p(k) proportional to k**-beta * gamma**k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import zeta as _hurwitz_zeta

from . import theory
from .errors import ConfigError

#: Normalizer series is truncated once a term drops below this fraction of
#: the running sum ...
_Z_TAIL = 1e-14
#: ... with a hard cap on summed terms; combinations that cannot converge
#: within the cap (gamma at or next to 1 with beta <= 1) are rejected.
_Z_MAX_TERMS = 1 << 24


@dataclass(frozen=True)
class DegreeHistogram:
    """Counts of active and inactive vertices per degree.

    Arrays are indexed by degree k (entry 0 unused); both have equal length.
    """

    active_counts: np.ndarray
    inactive_counts: np.ndarray
    step: int | None = None

    def __post_init__(self):
        a = np.asarray(self.active_counts, dtype=np.int64)
        i = np.asarray(self.inactive_counts, dtype=np.int64)
        n = max(len(a), len(i), 1)
        object.__setattr__(self, "active_counts", np.pad(a, (0, n - len(a))))
        object.__setattr__(self, "inactive_counts", np.pad(i, (0, n - len(i))))

    @classmethod
    def from_degree_arrays(cls, degrees, active_mask, step: int | None = None) -> "DegreeHistogram":
        degrees = np.asarray(degrees, dtype=np.int64)
        active_mask = np.asarray(active_mask, dtype=bool)
        return cls(
            active_counts=np.bincount(degrees[active_mask]),
            inactive_counts=np.bincount(degrees[~active_mask]),
            step=step,
        )

    @classmethod
    def from_dicts(
        cls, active: dict[int, int], inactive: dict[int, int] | None = None, step: int | None = None
    ) -> "DegreeHistogram":
        inactive = inactive or {}
        n = max([0, *active, *inactive]) + 1
        a = np.zeros(n, dtype=np.int64)
        i = np.zeros(n, dtype=np.int64)
        for k, c in active.items():
            a[k] = c
        for k, c in inactive.items():
            i[k] = c
        return cls(a, i, step=step)

    @classmethod
    def pooled(cls, hists: Iterable["DegreeHistogram"]) -> "DegreeHistogram":
        """Sum counts across histograms (e.g. runs pooled for statistics)."""
        hists = list(hists)
        if not hists:
            raise ValueError("nothing to pool")
        n = max(len(h.active_counts) for h in hists)
        a = np.zeros(n, dtype=np.int64)
        i = np.zeros(n, dtype=np.int64)
        for h in hists:
            a[: len(h.active_counts)] += h.active_counts
            i[: len(h.inactive_counts)] += h.inactive_counts
        return cls(a, i, step=None)

    @property
    def total_counts(self) -> np.ndarray:
        """N_k = active + inactive counts per degree."""
        return self.active_counts + self.inactive_counts

    @property
    def num_active(self) -> int:
        return int(self.active_counts.sum())

    @property
    def num_inactive(self) -> int:
        return int(self.inactive_counts.sum())

    @property
    def num_vertices(self) -> int:
        return self.num_active + self.num_inactive

    @property
    def max_degree(self) -> int:
        nz = np.nonzero(self.total_counts)[0]
        return int(nz[-1]) if len(nz) else 0

    @property
    def active_degree_sum(self) -> int:
        """Sum over k of k * (active count at k); equals D_t of the source state."""
        ks = np.arange(len(self.active_counts), dtype=np.int64)
        return int((ks * self.active_counts).sum())


def write_degrees_csv(hist: DegreeHistogram, path: str | Path) -> None:
    """CSV export with header k,active,inactive; only degrees with vertices."""
    total = hist.total_counts
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("k,active,inactive\n")
        for k in np.nonzero(total)[0]:
            f.write(f"{k},{hist.active_counts[k]},{hist.inactive_counts[k]}\n")


def read_degrees_csv(path: str | Path) -> DegreeHistogram:
    path = Path(path)
    active: dict[int, int] = {}
    inactive: dict[int, int] = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "k,active,inactive":
        raise ConfigError(f"{path}: expected header 'k,active,inactive'")
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        try:
            k, a, i = (int(p) for p in parts)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: expected 'k,active,inactive' integers, got {raw!r}") from None
        if k < 1 or a < 0 or i < 0:
            raise ConfigError(f"{path}:{lineno}: invalid degree row {raw!r}")
        active[k] = active.get(k, 0) + a
        inactive[k] = inactive.get(k, 0) + i
    if not active and not inactive:
        raise ConfigError(f"{path}: no degree rows")
    return DegreeHistogram.from_dicts(active, inactive)


# -- distribution summaries -------------------------------------------------


def ccdf(hist: DegreeHistogram) -> list[tuple[int, float]]:
    """Tail probabilities P[deg >= k] on the dense degree range of the data."""
    total = hist.total_counts
    nz = np.nonzero(total)[0]
    if len(nz) == 0:
        raise ValueError("empty histogram")
    k_min, k_max = int(nz[0]), int(nz[-1])
    n = total.sum()
    tail = np.cumsum(total[::-1])[::-1]
    return [(k, float(tail[k] / n)) for k in range(k_min, k_max + 1)]


def log_binned_pmf(hist: DegreeHistogram, bins_per_decade: int) -> list[tuple[float, float]]:
    """Geometrically binned degree density.

    Bin edges start at the smallest observed degree and grow by
    10**(1/bins_per_decade); each bin covers an integer range [lo, hi] and
    its density is count / (bin width * total), so density times width sums
    to one.  Edges are deterministic (near-integer edges snap down).
    """
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")
    total = hist.total_counts
    nz = np.nonzero(total)[0]
    if len(nz) == 0:
        raise ValueError("empty histogram")
    k_min, k_max = int(nz[0]), int(nz[-1])
    n = total.sum()
    edges = [k_min]
    j = 1
    while edges[-1] <= k_max:
        nxt = int(math.floor(k_min * 10.0 ** (j / bins_per_decade) + 1e-9)) + 1
        nxt = max(nxt, edges[-1] + 1)
        edges.append(nxt)
        j += 1
    rows = []
    for lo, nxt in zip(edges[:-1], edges[1:]):
        hi = nxt - 1
        width = nxt - lo
        count = int(total[lo : min(nxt, len(total))].sum())
        center = math.sqrt(lo * hi)
        rows.append((center, count / (width * n)))
    return rows


# -- trajectory statistics --------------------------------------------------


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


def slope_fit(t, values, t_min: float = 0.0) -> SlopeFit:
    """Least-squares line through (t, value) points with t >= t_min."""
    t = np.asarray(t, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    sel = t >= t_min
    x, y = t[sel], values[sel]
    if len(x) < 2:
        raise ValueError("need at least two points past the burn-in")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("degenerate fit: all points share the same t")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float((resid @ resid)) / ss_tot
    return SlopeFit(slope, intercept, r2)


@dataclass(frozen=True)
class ConcentrationRow:
    t: int
    mean: float
    std: float
    max_dev: float


def concentration_report(traces: Sequence, times: Sequence[int]) -> list[ConcentrationRow]:
    """Across-run spread of D_t / t at the requested times.

    Shrinking relative spread with t is the empirical signature that the
    active degree sum concentrates around its expectation.
    """
    if len(traces) < 2:
        raise ValueError("need at least two runs")
    horizon = min(tr.steps for tr in traces)
    rows = []
    for t in times:
        t = int(t)
        if not 1 <= t <= horizon:
            raise ValueError(f"time {t} outside [1, {horizon}]")
        vals = np.array([tr.D[t] for tr in traces], dtype=np.float64) / t
        mean = float(vals.mean())
        rows.append(
            ConcentrationRow(
                t=t,
                mean=mean,
                std=float(vals.std()),
                max_dev=float(np.abs(vals - mean).max()),
            )
        )
    return rows


def theta_convergence(trace_or_traces) -> tuple[np.ndarray, np.ndarray]:
    """Running mean of deactivated degrees over time.

    For an ensemble, run-level running means are averaged over the runs
    that have seen a deactivation by time t.  Returns (t, mean) arrays,
    empty when no run has deactivated anything.
    """
    traces = trace_or_traces if isinstance(trace_or_traces, (list, tuple)) else [trace_or_traces]
    if not traces:
        raise ValueError("no traces")
    horizon = min(tr.steps for tr in traces)
    stacked = np.stack([tr.theta_running[: horizon + 1] for tr in traces])
    have = ~np.isnan(stacked)
    counts = have.sum(axis=0)
    sums = np.where(have, stacked, 0.0).sum(axis=0)
    ts = np.nonzero(counts > 0)[0]
    if len(ts) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    return ts.astype(np.int64), sums[ts] / counts[ts]


# -- power law with exponential cutoff: MLE ---------------------------------


@dataclass(frozen=True)
class FitResult:
    beta: float
    gamma: float
    log_likelihood: float
    k_min: int
    iterations: int


def _log_norm(beta: float, gamma: float, k_min: int) -> float | None:
    """log Z with Z = sum_{k >= k_min} k**-beta * gamma**k; None if no converge."""
    if gamma == 1.0:
        if beta <= 1.0:
            return None
        return math.log(float(_hurwitz_zeta(beta, k_min)))
    log_g = math.log(gamma)
    scale = -beta * math.log(k_min) + k_min * log_g
    z = 0.0
    k0 = k_min
    chunk = 1 << 16
    while k0 < k_min + _Z_MAX_TERMS:
        kk = np.arange(k0, k0 + chunk, dtype=np.float64)
        w = np.exp(-beta * np.log(kk) + kk * log_g - scale)
        z += float(w.sum())
        if w[-1] < _Z_TAIL * z:
            return scale + math.log(z)
        k0 += chunk
    return None


def cutoff_loglik(hist: DegreeHistogram, beta: float, gamma: float, k_min: int = 1) -> float:
    """Log-likelihood of the cutoff family on degrees >= k_min.

    Returns -inf for parameter combinations whose normalizer does not
    converge (gamma at or next to 1 with beta <= 1).
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    total = hist.total_counts
    if k_min >= len(total):
        raise ValueError("no data at or above k_min")
    n_k = total[k_min:].astype(np.float64)
    kk = np.arange(k_min, len(total), dtype=np.float64)
    keep = n_k > 0
    n_obs = float(n_k.sum())
    s_lnk = float((n_k[keep] * np.log(kk[keep])).sum())
    s_k = float((n_k[keep] * kk[keep]).sum())
    ln_z = _log_norm(beta, gamma, k_min)
    if ln_z is None:
        return -math.inf
    log_g = 0.0 if gamma == 1.0 else math.log(gamma)
    return -beta * s_lnk + s_k * log_g - n_obs * ln_z


_COARSE_BETA = np.round(np.arange(0.0, 6.0001, 0.2), 10)
_COARSE_GAMMA = np.concatenate(
    [np.round(np.arange(0.02, 0.9801, 0.04), 10), [0.99, 0.995, 0.999, 0.9999], [1.0]]
)


def fit_powerlaw_cutoff(hist: DegreeHistogram, k_min: int = 1) -> FitResult:
    """Maximum-likelihood fit of p(k) proportional to k**-beta * gamma**k.

    Search over beta in [0, 6] and gamma in (0, 1]: a coarse grid followed
    by zooming local grids down to 1e-6 spacing in both parameters.  The
    boundary gamma = 1 (pure power law) is admissible only with beta > 1;
    the refined optimum never falls below the best coarse-grid point.
    """
    total = hist.total_counts
    if int((total[k_min:] > 0).sum()) < 10:
        raise ValueError("need at least 10 distinct degrees at or above k_min")

    evals = 0

    def ll(b: float, g: float) -> float:
        nonlocal evals
        evals += 1
        return cutoff_loglik(hist, b, g, k_min)

    best_ll, best_b, best_g = -math.inf, None, None
    for b in _COARSE_BETA:
        for g in _COARSE_GAMMA:
            v = ll(float(b), float(g))
            if v > best_ll:
                best_ll, best_b, best_g = v, float(b), float(g)
    if best_b is None:
        raise ValueError("no admissible parameter point (normalizer diverges everywhere)")
    span_b, span_g = 0.2, 0.04
    while span_b > 1e-6 or span_g > 1e-6:
        for b in np.linspace(max(0.0, best_b - span_b), min(6.0, best_b + span_b), 7):
            for g in np.linspace(max(1e-6, best_g - span_g), min(1.0, best_g + span_g), 7):
                v = ll(float(b), float(g))
                if v > best_ll:
                    best_ll, best_b, best_g = v, float(b), float(g)
        span_b *= 0.5
        span_g *= 0.5
    return FitResult(beta=best_b, gamma=best_g, log_likelihood=best_ll, k_min=k_min, iterations=evals)


# -- comparison against the limiting distribution ----------------------------


@dataclass(frozen=True)
class CompareRow:
    k: int
    empirical: float
    theoretical: float
    rel_err: float


@dataclass(frozen=True)
class ComparisonReport:
    rows: list[CompareRow]
    mean_rel_err: float
    max_rel_err: float


def compare_to_theory(
    hist: DegreeHistogram, cp: "theory.CutoffParams", min_expected: float = 50.0
) -> ComparisonReport:
    """Relative errors of empirical degree fractions against the limit law.

    Degrees whose expected count (limit fraction times vertex count) falls
    below `min_expected` are excluded so tail noise does not dominate; a
    qualifying degree observed zero times contributes relative error 1.
    """
    n_vertices = hist.num_vertices
    if n_vertices <= 0:
        raise ValueError("histogram is empty")
    k_hi = max(hist.max_degree, 64)
    while theory.expected_fraction(k_hi, cp) * n_vertices >= min_expected:
        k_hi *= 2
    ks = np.arange(1, k_hi + 1)
    expected = theory.expected_fraction(ks, cp)
    total = hist.total_counts
    rows = []
    for k, exp_frac in zip(ks, expected):
        if exp_frac * n_vertices < min_expected:
            continue
        emp = float(total[k] / n_vertices) if k < len(total) else 0.0
        rows.append(CompareRow(int(k), emp, float(exp_frac), abs(emp - exp_frac) / exp_frac))
    if not rows:
        return ComparisonReport([], 0.0, 0.0)
    errs = np.array([r.rel_err for r in rows])
    return ComparisonReport(rows, float(errs.mean()), float(errs.max()))
