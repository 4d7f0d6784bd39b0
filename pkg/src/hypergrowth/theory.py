"""Closed-form predictions for the growth model.

Contains the Gaussian hypergeometric series, the update map R whose unique
fixed point is the limiting mean degree `theta` of deactivated vertices,
the contraction-based fixed-point solver, and the parameters of the
limiting degree distribution (a power law with exponential cutoff).

With probabilities (p_v, p_e, p_d) and mean hyperedge cardinality mu, the
per-step expected degree mass attached to existing vertices is
``p_v (mu - 1) + p_e mu``; adding p_d gives the normalizer that appears
throughout.  All quantities here are pure functions of (p_v, p_e, p_d, mu).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonConvergenceError

#: Hypergeometric arguments z = gamma above this are refused: series terms
#: decay like gamma^n and the term cap no longer guarantees 1e-10 accuracy.
GAMMA_LIMIT = 0.999

_MAX_TERMS = 1_000_000


@dataclass(frozen=True)
class TheoryParams:
    """Event probabilities plus the mean hyperedge cardinality."""

    p_v: float
    p_e: float
    p_d: float
    mu: float

    def __post_init__(self):
        if not (0.0 <= self.p_v <= 1.0 and 0.0 <= self.p_e <= 1.0 and 0.0 <= self.p_d <= 1.0):
            raise ConfigError("event probabilities must lie in [0, 1]")
        if abs(self.p_v + self.p_e + self.p_d - 1.0) > 1e-9:
            raise ConfigError("event probabilities must sum to 1")
        if self.p_d > 0.0 and self.p_v <= self.p_d:
            raise ConfigError(
                "p_v must exceed p_d when deactivation is possible, otherwise "
                "the process dies out almost surely"
            )
        if not self.mu >= 1.0:
            raise ConfigError("mean cardinality must be >= 1 (hyperedges are non-empty)")

    @property
    def attach_rate(self) -> float:
        """Expected degree mass added to existing vertices per step."""
        return self.p_v * (self.mu - 1.0) + self.p_e * self.mu

    @property
    def gamma(self) -> float:
        """Cutoff base of the limiting degree distribution, in [0, 1)."""
        return self.attach_rate / (self.attach_rate + self.p_d)

    @property
    def theta_hat(self) -> float:
        """Upper end of the interval on which the update map is iterated."""
        if self.p_d == 0.0:
            raise ConfigError("theta is undefined without deactivation (p_d = 0)")
        return (self.p_v + self.p_e) * self.mu / self.p_d


@dataclass(frozen=True)
class CutoffParams:
    """Parameters of the limiting degree distribution and derived slopes.

    The limiting fraction of degree-k vertices behaves like
    ``c * k**-beta * gamma**k * (1/k + delta)``; `alpha` is the slope of the
    expected active degree sum over time and `q` the Lipschitz diagnostic of
    the fixed-point iteration.
    """

    theta: float
    beta: float
    gamma: float
    delta: float
    c: float
    theta_hat: float
    alpha: float
    q: float


def gauss_2f1(a: float, b: float, c: float, z: float, tol: float = 1e-14) -> float:
    """Gaussian hypergeometric 2F1(a, b; c; z) by direct series summation.

    Terms are accumulated with compensated (Kahan) summation until the
    current term is below tol * |partial sum| three times in a row, with a
    hard cap of one million terms.  Requires |z| < 1 and c not a
    non-positive integer.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if abs(z) >= 1.0:
        raise ValueError(f"2F1 series requires |z| < 1, got z = {z}")
    if c <= 0.0 and c == int(c):
        raise ValueError(f"2F1 undefined for non-positive integer c = {c}")
    total = 1.0
    comp = 0.0
    term = 1.0
    small_streak = 0
    for n in range(_MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (1.0 + n)) * z
        if term == 0.0:  # terminating (polynomial) case or underflow
            break
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) < tol * abs(total):
            small_streak += 1
            if small_streak >= 3:
                break
        else:
            small_streak = 0
    else:
        raise NonConvergenceError(
            f"2F1({a}, {b}; {c}; {z}) did not converge within {_MAX_TERMS} terms; "
            f"last term {term:.3e}"
        )
    return total


def rho(x: float, params: TheoryParams) -> float:
    """Third hypergeometric argument as a function of the trial theta.

    Affine in x with slope gamma - 1: rho(theta_hat) = 2 exactly.
    """
    norm = params.attach_rate + params.p_d
    return 2.0 + (params.mu * (params.p_v + params.p_e) - params.p_d * x) / norm


def _check_r_domain(x: float, params: TheoryParams) -> None:
    if params.p_d <= 0.0:
        raise ConfigError("theta is undefined without deactivation (p_d = 0)")
    if params.gamma > GAMMA_LIMIT:
        raise ValueError(
            f"gamma = {params.gamma:.6f} exceeds {GAMMA_LIMIT}; the hypergeometric "
            "series cannot reach the required accuracy this close to 1"
        )
    if not 0.0 <= x <= params.theta_hat:
        raise ValueError(f"x = {x} outside the admissible interval [0, {params.theta_hat}]")


def r_map(x: float, params: TheoryParams, form: str = "ratio") -> float:
    """Update map R whose unique fixed point on [0, theta_hat] is theta.

    form="ratio": R(x) = 2F1(2,2;rho(x);g) / 2F1(1,2;rho(x);g).
    form="closed": the contiguous-relation form
    R(x) = x - p_v/p_d + (rho(x) - 1) / ((1 - g) * 2F1(1,2;rho(x);g)),
    requiring a single series evaluation.  Both agree to ~1e-9 relative.
    """
    _check_r_domain(x, params)
    g = params.gamma
    r = rho(x, params)
    f1 = gauss_2f1(1.0, 2.0, r, g)
    if form == "ratio":
        return gauss_2f1(2.0, 2.0, r, g) / f1
    if form == "closed":
        return x - params.p_v / params.p_d + (r - 1.0) / ((1.0 - g) * f1)
    raise ValueError(f"unknown form {form!r}")


def lipschitz_bound(gamma: float) -> float:
    """Convergence-rate diagnostic q = 1 + ((1-gamma)/gamma) * ln(1-gamma).

    This is the slope of the update map at theta_hat; it equals the best
    Lipschitz constant only under an (unproven) convexity conjecture, so it
    is reported as a diagnostic and never used as a correctness guarantee.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    return 1.0 + (1.0 - gamma) / gamma * math.log(1.0 - gamma)


@dataclass(frozen=True)
class ThetaSolution:
    """Fixed point of the update map with convergence evidence."""

    theta: float
    iterations: int
    residual: float
    error_bound: float
    q: float
    iterates: np.ndarray

    def __iter__(self):
        # allows: theta, iterations, residual = solve_theta(...)
        return iter((self.theta, self.iterations, self.residual))


def solve_theta(
    params: TheoryParams,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    theta0: float = 0.0,
) -> ThetaSolution:
    """Iterate theta_{n+1} = R(theta_n) until |change| < tol.

    The map is a contraction on [0, theta_hat], so the iteration converges
    from any start in the interval; theta0 defaults to 0.  The reported
    residual is |R(theta) - theta| at the returned value, and error_bound
    scales the final step by q/(1-q).
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    _check_r_domain(theta0, params)
    g = params.gamma
    q = lipschitz_bound(g) if 0.0 < g < 1.0 else 0.0
    iterates = [theta0]
    x = theta0
    for n in range(1, max_iter + 1):
        x_next = r_map(x, params, form="ratio")
        iterates.append(x_next)
        if abs(x_next - x) < tol:
            residual = abs(r_map(x_next, params, form="ratio") - x_next)
            bound = q / (1.0 - q) * abs(x_next - x) if q < 1.0 else math.inf
            return ThetaSolution(x_next, n, residual, bound, q, np.array(iterates))
        x = x_next
    raise NonConvergenceError(
        f"fixed-point iteration did not converge within {max_iter} iterations "
        f"(last change {abs(iterates[-1] - iterates[-2]):.3e})"
    )


def slope_alpha(params: TheoryParams, theta: float) -> float:
    """Limiting slope of the expected active degree sum: (p_v+p_e)mu - p_d*theta."""
    return (params.p_v + params.p_e) * params.mu - params.p_d * theta


def cutoff_params(
    params: TheoryParams,
    theta: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> CutoffParams:
    """Assemble the limiting-distribution parameters, solving theta if needed."""
    if theta is None:
        theta = solve_theta(params, tol=tol, max_iter=max_iter).theta
    alpha = slope_alpha(params, theta)
    norm = params.attach_rate + params.p_d
    beta = alpha / norm
    g = params.gamma
    delta = params.p_d / alpha
    c = beta * math.gamma(1.0 + beta) / g
    q = lipschitz_bound(g) if 0.0 < g < 1.0 else 0.0
    return CutoffParams(
        theta=theta,
        beta=beta,
        gamma=g,
        delta=delta,
        c=c,
        theta_hat=params.theta_hat,
        alpha=alpha,
        q=q,
    )


def expected_fraction(k, cp: CutoffParams, form: str = "exact"):
    """Limiting expected fraction of vertices of degree k.

    form="exact":
        (beta/gamma) * gamma^k * Gamma(1+beta) * Gamma(k) / Gamma(k+beta+1)
        * (1 + k*delta)
    form="asymptotic":
        c * k^-beta * gamma^k * (1/k + delta)
    Gamma ratios are evaluated in log space so k up to 1e5 neither overflows
    nor loses the gamma^k scale.  Accepts a scalar or an integer array.
    """
    ks = np.asarray(k)
    if np.any(ks < 1):
        raise ValueError("degrees start at k = 1")
    kf = ks.astype(np.float64)
    if form == "exact":
        log_val = (
            math.log(cp.beta / cp.gamma)
            + kf * math.log(cp.gamma)
            + math.lgamma(1.0 + cp.beta)
            + _lgamma_vec(kf)
            - _lgamma_vec(kf + cp.beta + 1.0)
        )
        out = np.exp(log_val) * (1.0 + kf * cp.delta)
    elif form == "asymptotic":
        log_val = math.log(cp.c) - cp.beta * np.log(kf) + kf * math.log(cp.gamma)
        out = np.exp(log_val) * (1.0 / kf + cp.delta)
    else:
        raise ValueError(f"unknown form {form!r}")
    return float(out) if np.isscalar(k) else out


def _lgamma_vec(x):
    from scipy.special import gammaln

    return gammaln(x)


def powerlaw_reduction(params: TheoryParams) -> tuple[float, float]:
    """Pure power-law parameters of the deactivation-free model (p_d = 0).

    Returns (beta_pl, c_pl) with the expected degree-k fraction behaving
    like c_pl * k**-(beta_pl + 1); beta_pl = mu / (mu - p_v).
    """
    if params.p_d != 0.0:
        raise ValueError("the power-law reduction applies only when p_d = 0")
    if params.mu <= params.p_v:
        raise ValueError("the reduction requires mu > p_v")
    beta_pl = params.mu / (params.mu - params.p_v)
    return beta_pl, beta_pl * math.gamma(1.0 + beta_pl)
