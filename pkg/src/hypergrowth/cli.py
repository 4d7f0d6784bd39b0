"""Command-line front end.

Subcommands: simulate, ensemble, theta, theory, compare.  Every command is
a pure function of its configuration and input files: identical inputs
produce byte-identical CSV outputs (LF newlines, repr'd doubles, no locale
dependence).

Configuration comes from an optional flat ``key = value`` file (`--config`)
overridden by command-line flags; flags win.  Exit codes: 0 ok, 2 bad
configuration or input file, 3 early termination when --fail-on-termination
is set (or an ensemble left too few surviving runs), 4 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, theory
from .cardinality import Constant, Empirical, TruncatedPoisson, from_sizes_file
from .errors import ConfigError, NonConvergenceError
from .process import ModelParams, ensemble, run, write_hyperedge_log, write_trajectory_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TERMINATED = 3
EXIT_NONCONVERGENCE = 4


def law_from_spec(spec: str):
    """Parse a cardinality spec: constant:m | poisson:lambda | empirical:path."""
    kind, sep, arg = spec.partition(":")
    if not sep:
        raise ConfigError(f"cardinality spec {spec!r} needs the form kind:argument")
    try:
        if kind == "constant":
            return Constant(int(arg))
        if kind == "poisson":
            return TruncatedPoisson(float(arg))
        if kind == "empirical":
            return from_sizes_file(arg)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad cardinality spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown cardinality kind {kind!r} (constant|poisson|empirical)")


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_list(s: str) -> tuple[int, ...]:
    s = s.strip()
    if not s:
        return ()
    return tuple(int(p) for p in s.split(","))


# file/flag keys, their parsers, and hard defaults
_SCHEMA: dict[str, tuple] = {
    "pv": (float, None),
    "pe": (float, None),
    "pd": (float, None),
    "cardinality": (str, None),
    "mu": (float, None),
    "steps": (int, 10_000),
    "runs": (int, 100),
    "seed": (int, 0),
    "snapshots": (_parse_int_list, ()),
    "out": (str, "out"),
    "tol": (float, 1e-10),
    "max_iter": (int, 10_000),
    "k_max": (int, 1000),
    "k_min": (int, 1),
    "min_expected": (float, 50.0),
    "t_min": (int, None),
    "degrees": (str, None),
    "parallel": (int, 1),
    "resample_terminated": (_parse_bool, False),
    "fail_on_termination": (_parse_bool, False),
    "hyperedge_log": (_parse_bool, False),
}


@dataclass
class RunConfig:
    """Typed configuration shared by all subcommands."""

    pv: float | None = None
    pe: float | None = None
    pd: float | None = None
    cardinality: str | None = None
    mu: float | None = None
    steps: int = 10_000
    runs: int = 100
    seed: int = 0
    snapshots: tuple[int, ...] = ()
    out: str = "out"
    tol: float = 1e-10
    max_iter: int = 10_000
    k_max: int = 1000
    k_min: int = 1
    min_expected: float = 50.0
    t_min: int | None = None
    degrees: str | None = None
    parallel: int = 1
    resample_terminated: bool = False
    fail_on_termination: bool = False
    hyperedge_log: bool = False
    _law: object = field(default=None, repr=False)

    def _require_probs(self) -> tuple[float, float]:
        if self.pv is None or self.pe is None:
            raise ConfigError("p_v and p_e are required (flags --pv/--pe or config keys pv/pe)")
        if self.pd is not None and abs((1.0 - self.pv - self.pe) - self.pd) > 1e-9:
            raise ConfigError(
                f"pd = {self.pd} inconsistent with 1 - pv - pe = {1.0 - self.pv - self.pe}"
            )
        return self.pv, self.pe

    def law(self):
        if self._law is None:
            if self.cardinality is None:
                raise ConfigError("a cardinality law is required (--cardinality kind:arg)")
            self._law = law_from_spec(self.cardinality)
        return self._law

    def model_params(self, snapshots: tuple[int, ...] = ()) -> ModelParams:
        pv, pe = self._require_probs()
        snaps = tuple(sorted(set(self.snapshots) | set(snapshots)))
        return ModelParams(
            p_v=pv,
            p_e=pe,
            law=self.law(),
            steps=self.steps,
            seed=self.seed,
            store_hyperedges=self.hyperedge_log,
            snapshot_times=snaps,
        )

    def theory_params(self) -> theory.TheoryParams:
        pv, pe = self._require_probs()
        mu = self.mu if self.mu is not None else self.law().mean()
        pd = 1.0 - pv - pe
        if abs(pd) < 1e-12:
            pd = 0.0
        return theory.TheoryParams(p_v=pv, p_e=pe, p_d=pd, mu=mu)

    @property
    def burn_in(self) -> int:
        return self.t_min if self.t_min is not None else self.steps // 10

    @property
    def out_dir(self) -> Path:
        return Path(self.out)


def _read_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, object] = {k: default for k, (_, default) in _SCHEMA.items()}
    if getattr(args, "config", None):
        for key, raw in _read_config_file(args.config).items():
            parse, _ = _SCHEMA[key]
            try:
                values[key] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from None
    for key in _SCHEMA:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            values[key] = flag
    return RunConfig(**values)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(str(c) for c in row) + "\n")


# -- subcommands -------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    params = cfg.model_params(snapshots=(cfg.steps,))
    trace = run(params)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(trace, out / "trajectory.csv")
    for t, hist in sorted(trace.snapshots.items()):
        analysis.write_degrees_csv(hist, out / f"degrees_t{t}.csv")
    if cfg.hyperedge_log:
        write_hyperedge_log(trace, out / "hyperedges.txt")
    status = "terminated at step %d" % trace.termination_step if trace.terminated else "completed"
    print(
        f"simulate: {status}; steps = {trace.steps}, vertices = {trace.num_vertices}, "
        f"D_final = {trace.D[-1]}"
    )
    if trace.terminated and cfg.fail_on_termination:
        print("error: process terminated early (all vertices deactivated)", file=sys.stderr)
        return EXIT_TERMINATED
    return EXIT_OK


def cmd_ensemble(cfg: RunConfig) -> int:
    if cfg.runs < 2:
        raise ConfigError("ensemble needs runs >= 2")
    params = cfg.model_params()
    T = cfg.steps
    conc_times = np.unique(
        np.clip(np.round(10 ** np.linspace(0.0, np.log10(max(T, 2)), 25)).astype(np.int64), 1, T)
    )
    sum_d = np.zeros(T + 1)
    sum_d2 = np.zeros(T + 1)
    th_sum = np.zeros(T + 1)
    th_cnt = np.zeros(T + 1, dtype=np.int64)
    conc_rows: list[np.ndarray] = []
    kept = {"surviving": 0}

    def accumulate(trace) -> bool:
        # conditional aggregates: terminated runs are counted, not averaged
        if trace.terminated:
            return False
        kept["surviving"] += 1
        d = trace.D.astype(np.float64)
        sum_d += d
        sum_d2 += d * d
        have = ~np.isnan(trace.theta_running)
        th_sum[have] += trace.theta_running[have]
        th_cnt[have] += 1
        conc_rows.append(d[conc_times] / conc_times)
        return True

    result = ensemble(
        params,
        cfg.runs,
        cfg.seed,
        resample_terminated=cfg.resample_terminated,
        parallel=cfg.parallel,
        reducer=accumulate,
    )
    n_surviving = kept["surviving"]
    print(
        f"ensemble: {cfg.runs} runs kept ({n_surviving} surviving), "
        f"{result.n_terminated} terminated, {result.attempts} attempts"
    )
    if n_surviving < 2:
        print("error: fewer than two surviving runs; aggregates undefined "
              "(enable --resample-terminated)", file=sys.stderr)
        return EXIT_TERMINATED
    if result.n_terminated and cfg.fail_on_termination:
        print("error: terminated runs present and --fail-on-termination set", file=sys.stderr)
        return EXIT_TERMINATED

    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    mean_d = sum_d / n_surviving
    var_d = np.maximum(sum_d2 / n_surviving - mean_d**2, 0.0)
    std_d = np.sqrt(var_d)
    _write_csv(
        out / "ensemble_Dt.csv",
        "t,mean,std",
        ((t, _fmt(mean_d[t]), _fmt(std_d[t])) for t in range(T + 1)),
    )
    ts_theta = np.nonzero(th_cnt > 0)[0]
    _write_csv(
        out / "theta_running.csv",
        "t,mean",
        ((int(t), _fmt(th_sum[t] / th_cnt[t])) for t in ts_theta),
    )
    conc = np.stack(conc_rows)
    conc_mean = conc.mean(axis=0)
    _write_csv(
        out / "concentration.csv",
        "t,mean,std,max_dev",
        (
            (int(t), _fmt(m), _fmt(s), _fmt(d))
            for t, m, s, d in zip(
                conc_times, conc_mean, conc.std(axis=0), np.abs(conc - conc_mean).max(axis=0)
            )
        ),
    )
    fit = analysis.slope_fit(np.arange(T + 1), mean_d, t_min=cfg.burn_in)
    summary = (
        f"alpha_hat = {_fmt(fit.slope)} (least squares over t >= {cfg.burn_in}, "
        f"r2 = {_fmt(fit.r_squared)}, {n_surviving} surviving runs)"
    )
    print(summary)
    (out / "ensemble_summary.txt").write_text(summary + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_theta(cfg: RunConfig) -> int:
    tp = cfg.theory_params()
    if tp.p_d == 0.0:
        raise ConfigError(
            "p_d = 0: nothing is ever deactivated, so theta is undefined and the "
            "degree distribution is a pure power law; use `hypergrowth compare` "
            "or theory.powerlaw_reduction for this regime"
        )
    sol = theory.solve_theta(tp, tol=cfg.tol, max_iter=cfg.max_iter)
    cp = theory.cutoff_params(tp, theta=sol.theta)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "theta_iterates.csv",
        "n,theta",
        ((n, _fmt(x)) for n, x in enumerate(sol.iterates)),
    )
    print(f"mu = {_fmt(tp.mu)}")
    print(f"theta = {_fmt(sol.theta)}")
    print(f"iterations = {sol.iterations}")
    print(f"residual = {_fmt(sol.residual)}")
    print(f"error_bound = {_fmt(sol.error_bound)}")
    print(f"q = {_fmt(sol.q)}")
    print(f"alpha = {_fmt(cp.alpha)}")
    print(f"beta = {_fmt(cp.beta)}")
    print(f"gamma = {_fmt(cp.gamma)}")
    print(f"delta = {_fmt(cp.delta)}")
    print(f"c = {_fmt(cp.c)}")
    return EXIT_OK


def cmd_theory(cfg: RunConfig) -> int:
    tp = cfg.theory_params()
    if tp.p_d == 0.0:
        raise ConfigError(
            "p_d = 0 reduces to a pure power law; theory_pmf.csv applies to the "
            "cutoff regime (see theory.powerlaw_reduction)"
        )
    cp = theory.cutoff_params(tp, tol=cfg.tol, max_iter=cfg.max_iter)
    ks = np.arange(1, cfg.k_max + 1)
    exact = theory.expected_fraction(ks, cp, form="exact")
    asym = theory.expected_fraction(ks, cp, form="asymptotic")
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "theory_pmf.csv",
        "k,exact,asymptotic",
        ((int(k), _fmt(e), _fmt(a)) for k, e, a in zip(ks, exact, asym)),
    )
    print(f"theory: wrote k = 1..{cfg.k_max} (theta = {_fmt(cp.theta)}, alpha = {_fmt(cp.alpha)})")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    if cfg.degrees is None:
        raise ConfigError("compare needs --degrees pointing at a k,active,inactive CSV")
    hist = analysis.read_degrees_csv(cfg.degrees)
    fit = analysis.fit_powerlaw_cutoff(hist, k_min=cfg.k_min)
    print(
        f"fit: beta = {_fmt(fit.beta)}, gamma = {_fmt(fit.gamma)}, "
        f"loglik = {_fmt(fit.log_likelihood)}, k_min = {fit.k_min}"
    )
    tp = cfg.theory_params()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    if tp.p_d == 0.0:
        beta_pl, _ = theory.powerlaw_reduction(tp)
        print(
            f"pure power law regime: fitted exponent = {_fmt(fit.beta)}, "
            f"predicted exponent = {_fmt(beta_pl + 1.0)}"
        )
        return EXIT_OK
    cp = theory.cutoff_params(tp, tol=cfg.tol, max_iter=cfg.max_iter)
    report = analysis.compare_to_theory(hist, cp, min_expected=cfg.min_expected)
    _write_csv(
        out / "compare.csv",
        "k,empirical,theoretical,rel_err",
        ((r.k, _fmt(r.empirical), _fmt(r.theoretical), _fmt(r.rel_err)) for r in report.rows),
    )
    print(
        f"compare: mean rel err = {_fmt(report.mean_rel_err)}, "
        f"max rel err = {_fmt(report.max_rel_err)} over {len(report.rows)} degrees "
        f"(expected count >= {cfg.min_expected:g})"
    )
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--pv", type=float, help="vertex-event probability")
    p.add_argument("--pe", type=float, help="edge-event probability")
    p.add_argument("--pd", type=float, help="deactivation probability (consistency check only)")
    p.add_argument("--cardinality", help="constant:m | poisson:lambda | empirical:path")
    p.add_argument("--seed", type=int, help="master seed (64-bit)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--tol", type=float, help="fixed-point tolerance")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="fixed-point iteration cap")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypergrowth",
        description="Preferential-attachment hypergraph growth with vertex deactivation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one run; writes trajectory.csv and degrees_t*.csv")
    _add_common(p)
    p.add_argument("--steps", type=int)
    p.add_argument("--snapshots", type=_parse_int_list, help="comma-separated snapshot steps")
    p.add_argument("--hyperedge-log", dest="hyperedge_log", action="store_true", default=None)
    p.add_argument(
        "--fail-on-termination", dest="fail_on_termination", action="store_true", default=None
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ensemble", help="independent runs; writes ensemble aggregates")
    _add_common(p)
    p.add_argument("--steps", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--parallel", type=int, help="worker threads")
    p.add_argument("--t-min", dest="t_min", type=int, help="burn-in for the slope fit")
    p.add_argument(
        "--resample-terminated",
        dest="resample_terminated",
        action="store_true",
        default=None,
        help="replace runs that die early until `runs` survivors are collected",
    )
    p.add_argument(
        "--fail-on-termination", dest="fail_on_termination", action="store_true", default=None
    )
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("theta", help="fixed-point solve; prints the distribution parameters")
    _add_common(p)
    p.add_argument("--mu", type=float, help="mean cardinality override (skips the law)")
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("theory", help="limiting degree pmf; writes theory_pmf.csv")
    _add_common(p)
    p.add_argument("--mu", type=float, help="mean cardinality override (skips the law)")
    p.add_argument("--k-max", dest="k_max", type=int)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("compare", help="fit + compare a degrees CSV against the limit law")
    _add_common(p)
    p.add_argument("--mu", type=float, help="mean cardinality override (skips the law)")
    p.add_argument("--degrees", help="degrees CSV (header k,active,inactive)")
    p.add_argument("--k-min", dest="k_min", type=int, help="smallest degree used by the fit")
    p.add_argument("--min-expected", dest="min_expected", type=float)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        code = args.func(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return code


if __name__ == "__main__":
    sys.exit(main())
