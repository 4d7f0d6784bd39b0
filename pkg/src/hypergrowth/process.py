"""The growth process: vertex arrivals, hyperedge arrivals, deactivations.

Each step performs exactly one event:

* with probability p_v, add a vertex and a hyperedge containing it plus
  y - 1 degree-proportional picks from the active set (y drawn from the
  cardinality law);
* with probability p_e, add a hyperedge over y degree-proportional picks;
* with probability p_d = 1 - p_v - p_e, deactivate one degree-proportional
  pick, freezing its degree.

Picks are independent with repetition and always use the degree table as
of the start of the event; the event's degree contributions are applied
atomically afterwards.  If the active set is empty the process is frozen
and every later step reports termination.

Draw order (fixed reproducibility contract, one SplitMix64 stream per run):
1. one uniform u for the event type (u < p_v: vertex; u < p_v + p_e: edge;
   otherwise deactivation);
2. the cardinality draw where the event needs one (constant laws consume
   no uniform, table laws exactly one);
3. one uniform u' per pick, mapped through DegreeIndex.sample(1 - u').

The compiled kernel and the per-event Python path replay identical
streams and produce bit-identical traces.
"""

from __future__ import annotations

import itertools
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Union

import numpy as np

from ._jit import HAVE_NUMBA, njit
from .analysis import DegreeHistogram
from .cardinality import CardinalityLaw
from .errors import ConfigError, NonConvergenceError
from .rng import SplitMix64, derive_run_seed
from .sampler import DegreeIndex, _fw_add, _fw_build, _fw_find


@dataclass(frozen=True)
class InitialHypergraph:
    """Explicit finite starting hypergraph; all vertices begin active."""

    num_vertices: int
    hyperedges: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "hyperedges", tuple(tuple(int(v) for v in e) for e in self.hyperedges)
        )
        if self.num_vertices < 1:
            raise ConfigError("initial hypergraph needs at least one vertex")
        if not self.hyperedges:
            raise ConfigError("initial hypergraph needs at least one hyperedge")
        deg = np.zeros(self.num_vertices, dtype=np.int64)
        for e in self.hyperedges:
            if len(e) == 0:
                raise ConfigError("hyperedges are non-empty")
            for v in e:
                if not 0 <= v < self.num_vertices:
                    raise ConfigError(f"hyperedge vertex {v} out of range")
                deg[v] += 1
        if (deg == 0).any():
            raise ConfigError("every initial vertex must appear in some hyperedge")
        object.__setattr__(self, "_degrees", deg)

    @classmethod
    def single_vertex(cls) -> "InitialHypergraph":
        """The default start: one hyperedge of cardinality 1 over one vertex."""
        return cls(1, ((0,),))

    def degrees(self) -> np.ndarray:
        return self._degrees.copy()


@dataclass(frozen=True)
class ModelParams:
    """Full specification of one run."""

    p_v: float
    p_e: float
    law: CardinalityLaw
    steps: int
    seed: int = 0
    store_hyperedges: bool = False
    snapshot_times: tuple[int, ...] = ()
    initial: InitialHypergraph | None = None

    def __post_init__(self):
        if not (0.0 <= self.p_v <= 1.0 and 0.0 <= self.p_e <= 1.0):
            raise ConfigError("p_v and p_e must lie in [0, 1]")
        if self.p_v + self.p_e > 1.0 + 1e-12:
            raise ConfigError("p_v + p_e must not exceed 1")
        if self.p_d > 0.0 and self.p_v <= self.p_d:
            raise ConfigError(
                "p_v must exceed p_d = 1 - p_v - p_e when deactivation is possible: "
                "on average the process must add more vertices than it deactivates"
            )
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        if not isinstance(self.law, CardinalityLaw):
            raise ConfigError("law must be a CardinalityLaw")
        snaps = tuple(sorted(set(int(s) for s in self.snapshot_times)))
        for s in snaps:
            if not 0 <= s <= self.steps:
                raise ConfigError(f"snapshot time {s} outside [0, {self.steps}]")
        object.__setattr__(self, "snapshot_times", snaps)

    @property
    def p_d(self) -> float:
        pd = 1.0 - self.p_v - self.p_e
        return 0.0 if abs(pd) < 1e-12 else pd

    def initial_hypergraph(self) -> InitialHypergraph:
        return self.initial if self.initial is not None else InitialHypergraph.single_vertex()


# -- step events ---------------------------------------------------------


@dataclass(frozen=True)
class VertexAdded:
    new_id: int
    cardinality: int
    selected: tuple[int, ...]


@dataclass(frozen=True)
class EdgeAdded:
    cardinality: int
    selected: tuple[int, ...]


@dataclass(frozen=True)
class Deactivated:
    vertex: int
    degree: int


@dataclass(frozen=True)
class Terminated:
    pass


StepEvent = Union[VertexAdded, EdgeAdded, Deactivated, Terminated]


@dataclass
class GrowthState:
    """Mutable state of a single run."""

    params: ModelParams
    index: DegreeIndex
    t: int = 0
    A: int = 0
    I: int = 0
    cum_added: int = 0
    cum_deactivated: int = 0
    n_deactivations: int = 0
    hyperedges: list[tuple[int, ...]] | None = None
    terminated: bool = False

    @property
    def D(self) -> int:
        return self.index.total_weight

    @property
    def num_vertices(self) -> int:
        return self.index.num_vertices

    @property
    def theta_running_mean(self) -> float:
        if self.n_deactivations == 0:
            return float("nan")
        return self.cum_deactivated / self.n_deactivations

    def histogram(self) -> DegreeHistogram:
        return DegreeHistogram.from_degree_arrays(
            self.index.degrees(), self.index.active_mask(), step=self.t
        )


def initialize(params: ModelParams) -> GrowthState:
    """Fresh state at t = 0 from the initial hypergraph."""
    h0 = params.initial_hypergraph()
    degrees = h0.degrees()
    index = DegreeIndex(capacity=max(16, h0.num_vertices))
    for d in degrees:
        index.push_vertex(int(d))
    return GrowthState(
        params=params,
        index=index,
        A=h0.num_vertices,
        I=0,
        hyperedges=list(h0.hyperedges) if params.store_hyperedges else None,
    )


def step(state: GrowthState, rng) -> StepEvent:
    """Advance one step; returns the applied event.

    With no active vertices the state freezes and `Terminated` is returned
    (also for a would-be vertex event needing no picks).
    """
    if state.terminated or state.A == 0:
        state.terminated = True
        return Terminated()
    p = state.params
    u_event = rng.random()
    index = state.index
    if u_event < p.p_v + p.p_e:
        y = p.law.sample(rng)
        n_sel = y - 1 if u_event < p.p_v else y
        selected = tuple(index.sample(1.0 - rng.random()) for _ in range(n_sel))
        if u_event < p.p_v:
            vid = index.push_vertex(1)
            state.A += 1
            edge = (vid,) + selected
            event: StepEvent = VertexAdded(vid, y, selected)
        else:
            edge = selected
            event = EdgeAdded(y, selected)
        for v in selected:
            index.add_degree(v, 1)
        state.cum_added += y
        if state.hyperedges is not None:
            state.hyperedges.append(edge)
    else:
        v = index.sample(1.0 - rng.random())
        frozen = index.deactivate(v)
        state.A -= 1
        state.I += 1
        state.n_deactivations += 1
        state.cum_deactivated += frozen
        event = Deactivated(v, frozen)
    state.t += 1
    return event


# -- run traces ----------------------------------------------------------


@dataclass
class RunTrace:
    """Trajectories and end state of one run.

    Series are indexed by step t = 0..steps.  After an early termination
    the state is frozen, so the tail of every series repeats the values at
    the termination step.
    """

    params: ModelParams
    D: np.ndarray
    A: np.ndarray
    I: np.ndarray
    theta_running: np.ndarray
    cum_added: np.ndarray
    cum_deactivated: np.ndarray
    snapshots: dict[int, DegreeHistogram]
    hyperedges: list[tuple[int, ...]] | None
    terminated: bool
    termination_step: int | None
    final_degrees: np.ndarray
    final_active: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.D) - 1

    @property
    def V(self) -> np.ndarray:
        return self.A + self.I

    @property
    def num_vertices(self) -> int:
        return len(self.final_degrees)

    def final_histogram(self) -> DegreeHistogram:
        end = self.termination_step if self.terminated else self.steps
        return DegreeHistogram.from_degree_arrays(self.final_degrees, self.final_active, step=end)


def write_trajectory_csv(trace: RunTrace, path: str | Path) -> None:
    """CSV export with header t,D,A,I,avg_deact_degree (LF newlines)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("t,D,A,I,avg_deact_degree\n")
        for t in range(len(trace.D)):
            f.write(
                f"{t},{trace.D[t]},{trace.A[t]},{trace.I[t]},{trace.theta_running[t]!r}\n"
            )


def write_hyperedge_log(trace: RunTrace, path: str | Path) -> None:
    """One hyperedge per line, space-separated ids, repetition = multiplicity."""
    if trace.hyperedges is None:
        raise ValueError("run was executed without hyperedge logging")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for edge in trace.hyperedges:
            f.write(" ".join(str(v) for v in edge) + "\n")


def _freeze_tail(term_at: int, *series: np.ndarray) -> None:
    for arr in series:
        arr[term_at + 1 :] = arr[term_at]


def run(params: ModelParams, engine: str = "auto") -> RunTrace:
    """Execute a full run; deterministic for a fixed seed.

    engine="kernel" uses the compiled stepping loop, "python" the per-event
    path (required for hyperedge logging), "auto" picks the kernel whenever
    it is available and logging is off.  Both engines produce bit-identical
    traces.
    """
    if engine == "auto":
        engine = "python" if (params.store_hyperedges or not HAVE_NUMBA) else "kernel"
    if engine == "kernel":
        if params.store_hyperedges:
            raise ConfigError("hyperedge logging requires engine='python'")
        return _run_kernel(params)
    if engine == "python":
        return _run_python(params)
    raise ConfigError(f"unknown engine {engine!r}")


def _alloc_series(params: ModelParams, state: GrowthState):
    T = params.steps
    D = np.zeros(T + 1, dtype=np.int64)
    A = np.zeros(T + 1, dtype=np.int64)
    I = np.zeros(T + 1, dtype=np.int64)
    theta = np.full(T + 1, np.nan)
    cadd = np.zeros(T + 1, dtype=np.int64)
    cde = np.zeros(T + 1, dtype=np.int64)
    D[0], A[0], I[0] = state.D, state.A, state.I
    return D, A, I, theta, cadd, cde


def _run_python(params: ModelParams) -> RunTrace:
    rng = SplitMix64(params.seed)
    state = initialize(params)
    D, A, I, theta, cadd, cde = _alloc_series(params, state)
    snapset = set(params.snapshot_times)
    snapshots: dict[int, DegreeHistogram] = {}
    if 0 in snapset:
        snapshots[0] = state.histogram()
    term_at = None
    for t in range(1, params.steps + 1):
        event = step(state, rng)
        if isinstance(event, Terminated):
            term_at = t - 1
            break
        D[t], A[t], I[t] = state.D, state.A, state.I
        theta[t] = state.theta_running_mean
        cadd[t], cde[t] = state.cum_added, state.cum_deactivated
        if t in snapset:
            snapshots[t] = state.histogram()
    if term_at is not None:
        _freeze_tail(term_at, D, A, I, theta, cadd, cde)
        for s in snapset:
            if s > term_at:
                snapshots[s] = state.histogram()
    return RunTrace(
        params=params,
        D=D,
        A=A,
        I=I,
        theta_running=theta,
        cum_added=cadd,
        cum_deactivated=cde,
        snapshots=snapshots,
        hyperedges=state.hyperedges,
        terminated=term_at is not None,
        termination_step=term_at,
        final_degrees=state.index.degrees(),
        final_active=state.index.active_mask(),
    )


# -- compiled stepping loop ------------------------------------------------

_U64 = np.uint64
_MASK = _U64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_SHIFT11 = _U64(11)
_INV_2_53 = 2.0**-53


@njit(cache=True, nogil=True)
def _kernel_segment(
    rng_state,
    t_start,
    t_end,
    p_v,
    p_e,
    law_kind,
    law_m,
    law_support,
    law_cdf,
    degree,
    active,
    tree,
    top,
    n_vertices,
    total,
    n_active,
    n_inactive,
    n_deact,
    sum_theta,
    c_add,
    c_de,
    D,
    A,
    I,
    theta_run,
    cadd,
    cde,
    sel_buf,
):
    """Steps t_start+1 .. t_end of the growth loop (same stream as `step`).

    Returns the carried state plus the termination step (-1 if none).
    """
    n_cap = degree.shape[0]
    pve = p_v + p_e
    term_at = -1
    for t in range(t_start + 1, t_end + 1):
        if n_active == 0:
            term_at = t - 1
            break
        rng_state = (rng_state + _GOLDEN) & _MASK
        z = rng_state
        z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _MASK
        z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _MASK
        z = z ^ (z >> _U64(31))
        u_event = np.float64(z >> _SHIFT11) * _INV_2_53
        if u_event < pve:
            if law_kind == 0:
                y = law_m
            else:
                rng_state = (rng_state + _GOLDEN) & _MASK
                z = rng_state
                z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _MASK
                z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _MASK
                z = z ^ (z >> _U64(31))
                u_y = np.float64(z >> _SHIFT11) * _INV_2_53
                lo = 0
                hi = law_cdf.shape[0]
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if law_cdf[mid] > u_y:
                        hi = mid
                    else:
                        lo = mid + 1
                if lo >= law_cdf.shape[0]:
                    lo = law_cdf.shape[0] - 1
                y = law_support[lo]
            n_sel = y - 1 if u_event < p_v else y
            total_f = np.float64(total)
            for s in range(n_sel):
                rng_state = (rng_state + _GOLDEN) & _MASK
                z = rng_state
                z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _MASK
                z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _MASK
                z = z ^ (z >> _U64(31))
                u = 1.0 - np.float64(z >> _SHIFT11) * _INV_2_53
                sel_buf[s] = _fw_find(tree, n_cap, top, u * total_f) - 1
            if u_event < p_v:
                vid = n_vertices
                n_vertices += 1
                degree[vid] = 1
                active[vid] = True
                _fw_add(tree, n_cap, vid + 1, 1)
                n_active += 1
            for s in range(n_sel):
                v = sel_buf[s]
                degree[v] += 1
                _fw_add(tree, n_cap, v + 1, 1)
            total += y
            c_add += y
        else:
            rng_state = (rng_state + _GOLDEN) & _MASK
            z = rng_state
            z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _MASK
            z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _MASK
            z = z ^ (z >> _U64(31))
            u = 1.0 - np.float64(z >> _SHIFT11) * _INV_2_53
            v = _fw_find(tree, n_cap, top, u * np.float64(total)) - 1
            frozen = degree[v]
            active[v] = False
            _fw_add(tree, n_cap, v + 1, -frozen)
            total -= frozen
            n_active -= 1
            n_inactive += 1
            n_deact += 1
            sum_theta += frozen
            c_de += frozen
        D[t] = total
        A[t] = n_active
        I[t] = n_inactive
        theta_run[t] = sum_theta / n_deact if n_deact > 0 else np.nan
        cadd[t] = c_add
        cde[t] = c_de
    return (
        rng_state,
        n_vertices,
        total,
        n_active,
        n_inactive,
        n_deact,
        sum_theta,
        c_add,
        c_de,
        term_at,
    )


def _run_kernel(params: ModelParams) -> RunTrace:
    T = params.steps
    h0 = params.initial_hypergraph()
    init_deg = h0.degrees()
    n0 = h0.num_vertices
    n_cap = n0 + T
    degree = np.zeros(n_cap, dtype=np.int64)
    active = np.zeros(n_cap, dtype=np.bool_)
    tree = np.zeros(n_cap + 1, dtype=np.int64)
    degree[:n0] = init_deg
    active[:n0] = True
    tree[1 : n0 + 1] = init_deg
    _fw_build(tree, n_cap)
    top = 1 << (n_cap.bit_length() - 1)
    if params.law.kind == "constant":
        law_kind, law_m = 0, params.law.max_size()
        law_support = np.zeros(1, dtype=np.int64)
        law_cdf = np.ones(1, dtype=np.float64)
    else:
        law_kind, law_m = 1, 0
        law_support, law_cdf = params.law.sampling_table()
    sel_buf = np.empty(max(int(params.law.max_size()), 1), dtype=np.int64)

    D = np.zeros(T + 1, dtype=np.int64)
    A = np.zeros(T + 1, dtype=np.int64)
    I = np.zeros(T + 1, dtype=np.int64)
    theta = np.full(T + 1, np.nan)
    cadd = np.zeros(T + 1, dtype=np.int64)
    cde = np.zeros(T + 1, dtype=np.int64)
    total0 = int(init_deg.sum())
    D[0], A[0], I[0] = total0, n0, 0

    carry = (
        _U64(params.seed & 0xFFFFFFFFFFFFFFFF),
        n0,
        total0,
        n0,
        0,
        0,
        0,
        0,
        0,
        -1,
    )
    snapset = set(params.snapshot_times)
    snapshots: dict[int, DegreeHistogram] = {}

    def snapshot(at: int, n_vertices: int) -> None:
        snapshots[at] = DegreeHistogram.from_degree_arrays(
            degree[:n_vertices], active[:n_vertices], step=at
        )

    if 0 in snapset:
        snapshot(0, n0)
    bounds = [s for s in params.snapshot_times if 0 < s < T] + [T]
    t_cur = 0
    term_at = None
    for b in bounds:
        if term_at is None and t_cur < b:
            carry = _kernel_segment(
                carry[0],
                t_cur,
                b,
                params.p_v,
                params.p_e,
                law_kind,
                law_m,
                law_support,
                law_cdf,
                degree,
                active,
                tree,
                top,
                *carry[1:9],
                D,
                A,
                I,
                theta,
                cadd,
                cde,
                sel_buf,
            )
            if carry[9] >= 0:
                term_at = int(carry[9])
            t_cur = b
        if b in snapset:
            snapshot(b, carry[1])
    if T in snapset and T not in snapshots:
        snapshot(T, carry[1])
    if term_at is not None:
        _freeze_tail(term_at, D, A, I, theta, cadd, cde)
    n_final = carry[1]
    return RunTrace(
        params=params,
        D=D,
        A=A,
        I=I,
        theta_running=theta,
        cum_added=cadd,
        cum_deactivated=cde,
        snapshots=snapshots,
        hyperedges=None,
        terminated=term_at is not None,
        termination_step=term_at,
        final_degrees=degree[:n_final].copy(),
        final_active=active[:n_final].copy(),
    )


# -- ensembles -------------------------------------------------------------


@dataclass
class EnsembleResult:
    """Outcome of an ensemble: kept items plus termination accounting.

    `items` holds one entry per kept run, in attempt order (the trace
    itself, or `reducer(trace)` when a reducer was supplied).  With
    resampling enabled, terminated attempts are counted and replaced;
    without it they are kept and merely counted.
    """

    items: list
    n_terminated: int
    attempts: int
    master_seed: int
    resampled: bool


def ensemble(
    params: ModelParams,
    n_runs: int,
    master_seed: int,
    *,
    resample_terminated: bool = False,
    parallel: int = 1,
    reducer: Callable[[RunTrace], object] | None = None,
    max_attempts: int | None = None,
    engine: str = "auto",
) -> EnsembleResult:
    """Independent runs with per-run seeds derived from the master seed.

    Run i uses seed ``derive_run_seed(master_seed, i)``; attempts are
    consumed in index order, so results are identical for any `parallel`
    degree.  With `resample_terminated`, attempts that die before finishing
    are discarded (counted in `n_terminated`) and further attempts are
    drawn until `n_runs` surviving runs are collected.
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    if max_attempts is None:
        max_attempts = n_runs if not resample_terminated else 50 * n_runs + 100
    take = reducer if reducer is not None else (lambda tr: tr)

    def attempt(i: int) -> RunTrace:
        return run(replace(params, seed=derive_run_seed(master_seed, i)), engine=engine)

    items: list = []
    n_term = 0
    attempts = 0

    def collect(trace: RunTrace) -> None:
        nonlocal n_term
        if trace.terminated:
            n_term += 1
            if resample_terminated:
                return
        items.append(take(trace))

    if parallel <= 1:
        for i in range(max_attempts):
            if len(items) >= n_runs:
                break
            collect(attempt(i))
            attempts = i + 1
    else:
        with ThreadPoolExecutor(max_workers=parallel) as ex:
            window: deque = deque()
            indices = iter(range(max_attempts))

            def refill() -> None:
                while len(window) < 2 * parallel:
                    i = next(indices, None)
                    if i is None:
                        return
                    window.append(ex.submit(attempt, i))

            refill()
            while window and len(items) < n_runs:
                trace = window.popleft().result()
                attempts += 1
                collect(trace)
                refill()
    if len(items) < n_runs:
        raise NonConvergenceError(
            f"collected only {len(items)} surviving runs out of {n_runs} "
            f"after {attempts} attempts ({n_term} terminated)"
        )
    return EnsembleResult(
        items=items,
        n_terminated=n_term,
        attempts=attempts,
        master_seed=master_seed,
        resampled=resample_terminated,
    )
