"""Closed-form error theory for the imbalanced binary-Gaussian model, with a
Monte-Carlo / grid-search oracle and parameter sweeps.

The model: class +1 drawn from N(theta, sigma^2 I), class -1 from
N(-theta, (K sigma)^2 I) with theta = eta * ones(d) and prior ratio
P-/P+ = Gamma. The classifier is u = sum(x) + b with the all-ones weight
fixed; only the bias b is free. Class-level perturbations shift u by a
bounded scalar chosen to maximize (first type) or minimize (second type) the
class-conditional error during training; reported errors are always the
natural (unshifted) ones.

Perturbation setups mirror the three analyzed regimes:
  * setup 1 (class imbalance, K = 1): first type on both classes with bounds
    rho_plus * eps on +1 and eps on -1;
  * setup 2 (class imbalance, K = 1): first type on +1 with bound eps, second
    type on -1 with bound rho_minus * eps;
  * setup 3 (variance imbalance, K > 1): first type on both classes with
    bounds rho_plus * eps and rho_minus * eps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import RngStream, std_normal_cdf

__all__ = [
    "TheoryParams",
    "ErrorPair",
    "SweepRow",
    "SweepTable",
    "SingularParameterError",
    "InfeasibleParameterError",
    "optimal_bias_thm1",
    "optimal_bias_thm2",
    "optimal_bias_thm3",
    "errors_thm1",
    "errors_thm2",
    "errors_thm3",
    "corollary_conditions",
    "perturbed_objective",
    "grid_search_bias",
    "mc_error_estimate",
    "mc_grid_search_bias",
    "training_shifts",
    "sweep",
]

SWEEP_CSV_HEADER = ["swept_param", "value", "err_plus_cf", "err_minus_cf",
                    "total_cf", "err_plus_mc", "err_minus_mc", "mc_se", "feasible"]


class SingularParameterError(ValueError):
    """A closed form is undefined at these parameters (zero denominator)."""


class InfeasibleParameterError(ValueError):
    """The parameters violate a theorem's feasibility constraints."""


@dataclass(frozen=True)
class TheoryParams:
    """Parameters of the binary-Gaussian model and its perturbation bounds."""

    d: int = 2
    eta: float = 1.0
    sigma: float = 1.0
    gamma: float = 1.0
    K: float = 1.0
    epsilon: float = 0.0
    rho_plus: float = 1.0
    rho_minus: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if self.eta <= 0 or self.sigma <= 0:
            raise ValueError("eta and sigma must be positive")
        if self.gamma < 1 or self.K < 1:
            raise ValueError("gamma and K must be >= 1")
        if self.epsilon < 0 or self.rho_plus < 0 or self.rho_minus < 0:
            raise ValueError("bounds must be nonnegative")

    @property
    def sqrt_d_sigma(self) -> float:
        return math.sqrt(self.d) * self.sigma


@dataclass(frozen=True)
class ErrorPair:
    """Class-conditional error rates and their prior-weighted combination."""

    err_minus: float
    err_plus: float
    gamma: float = 1.0

    @property
    def total(self) -> float:
        return (self.err_plus + self.gamma * self.err_minus) / (1.0 + self.gamma)

    @property
    def mean(self) -> float:
        return 0.5 * (self.err_plus + self.err_minus)


def _require_feasible_rho(p: TheoryParams, rhos) -> None:
    for rho in rhos:
        if rho * p.epsilon >= p.eta:
            raise InfeasibleParameterError(
                f"bound {rho}*{p.epsilon} must stay below eta={p.eta}")


# ---------------------------------------------------------------------------
# Training-time perturbation shifts (worst/best case on the 1-D logit).


def training_shifts(p: TheoryParams, setup: int) -> tuple[float, float]:
    """(shift_plus, shift_minus) added to u during perturbed training.

    First-type perturbation pushes a class toward its error region
    (- for +1, + for -1); second type pushes away.
    """
    e = p.epsilon
    if setup == 1:
        return -e * p.rho_plus, +e
    if setup == 2:
        return -e, -e * p.rho_minus
    if setup == 3:
        return -e * p.rho_plus, +e * p.rho_minus
    raise ValueError(f"unknown setup {setup}")


def perturbed_objective(p: TheoryParams, b, setup: int):
    """Closed-form perturbed training objective as a function of the bias.

    err_plus(b) + gamma * err_minus(b) with each class evaluated at its
    training-time shift; the minimizer is the optimal bias of the matching
    setup.
    """
    s_plus, s_minus = training_shifts(p, setup)
    b = np.asarray(b, dtype=float)
    d, eta = p.d, p.eta
    err_plus = std_normal_cdf(-(b + s_plus + d * eta) / p.sqrt_d_sigma)
    err_minus = std_normal_cdf((b + s_minus - d * eta) / (p.K * p.sqrt_d_sigma))
    return err_plus + p.gamma * err_minus


def _natural_errors(p: TheoryParams, b: float) -> ErrorPair:
    err_plus = std_normal_cdf(-(b + p.d * p.eta) / p.sqrt_d_sigma)
    err_minus = std_normal_cdf((b - p.d * p.eta) / (p.K * p.sqrt_d_sigma))
    return ErrorPair(err_minus=float(err_minus), err_plus=float(err_plus),
                     gamma=p.gamma)


# ---------------------------------------------------------------------------
# Closed forms.


def _a_value(p: TheoryParams, setup: int) -> float:
    e = p.epsilon
    if setup == 1:
        num = e - 2 * p.d * p.eta + e * p.rho_plus
    else:
        num = e - 2 * p.d * p.eta - e * p.rho_minus
    return num / p.sqrt_d_sigma


def optimal_bias_thm1(p: TheoryParams) -> float:
    """Optimal bias under setup 1: eps(rho_plus - 1)/2 + d sigma^2 log(Gamma)
    / (eps - 2 d eta + eps rho_plus)."""
    _require_feasible_rho(p, [p.rho_plus])
    denom = p.epsilon - 2 * p.d * p.eta + p.epsilon * p.rho_plus
    if denom == 0:
        raise SingularParameterError("eps(1 + rho_plus) equals 2 d eta")
    return 0.5 * p.epsilon * (p.rho_plus - 1.0) \
        + p.d * p.sigma ** 2 * math.log(p.gamma) / denom


def optimal_bias_thm2(p: TheoryParams) -> float:
    """Optimal bias under setup 2 (first type on +1, second type on -1)."""
    _require_feasible_rho(p, [p.rho_minus])
    denom = p.epsilon - 2 * p.d * p.eta - p.epsilon * p.rho_minus
    if denom == 0:
        raise SingularParameterError("degenerate bias denominator")
    return 0.5 * p.epsilon * (1.0 + p.rho_minus) \
        + p.d * p.sigma ** 2 * math.log(p.gamma) / denom


def optimal_bias_thm3(p: TheoryParams) -> float:
    """Optimal bias under setup 3 with variance ratio K > 1."""
    if p.K <= 1:
        raise SingularParameterError("setup 3 requires K > 1")
    _require_feasible_rho(p, [p.rho_plus, p.rho_minus])
    e, d, eta, K, sig = p.epsilon, p.d, p.eta, p.K, p.sigma
    radicand = (e * p.rho_minus + e * p.rho_plus - 2 * d * eta) ** 2 \
        + 2 * d * (K ** 2 - 1) * sig ** 2 * math.log(K / p.gamma)
    if radicand < 0:
        raise InfeasibleParameterError("negative radicand in the optimal bias")
    return (e * (p.rho_minus + K ** 2 * p.rho_plus)
            - d * eta * (K ** 2 + 1)
            + K * math.sqrt(radicand)) / (K ** 2 - 1)


def errors_thm1(p: TheoryParams) -> ErrorPair:
    """Natural class errors at the setup-1 optimal bias.

    err_minus = Phi(A/2 + log(Gamma)/A - eps/(sqrt(d) sigma)),
    err_plus  = Phi(A/2 - log(Gamma)/A - eps rho_plus/(sqrt(d) sigma)),
    A = (eps - 2 d eta + eps rho_plus)/(sqrt(d) sigma).
    """
    _require_feasible_rho(p, [p.rho_plus])
    A = _a_value(p, setup=1)
    if A == 0:
        raise SingularParameterError("A = 0")
    lg = math.log(p.gamma)
    em = std_normal_cdf(A / 2 + lg / A - p.epsilon / p.sqrt_d_sigma)
    ep = std_normal_cdf(A / 2 - lg / A - p.epsilon * p.rho_plus / p.sqrt_d_sigma)
    return ErrorPair(err_minus=float(em), err_plus=float(ep), gamma=p.gamma)


def errors_thm2(p: TheoryParams) -> ErrorPair:
    """Natural class errors at the setup-2 optimal bias.

    err_minus = Phi(A/2 + log(Gamma)/A + eps rho_minus/(sqrt(d) sigma)),
    err_plus  = Phi(A/2 - log(Gamma)/A - eps/(sqrt(d) sigma)),
    A = (eps - 2 d eta - eps rho_minus)/(sqrt(d) sigma).
    """
    _require_feasible_rho(p, [p.rho_minus])
    A = _a_value(p, setup=2)
    if A == 0:
        raise SingularParameterError("A = 0")
    lg = math.log(p.gamma)
    em = std_normal_cdf(A / 2 + lg / A + p.epsilon * p.rho_minus / p.sqrt_d_sigma)
    ep = std_normal_cdf(A / 2 - lg / A - p.epsilon / p.sqrt_d_sigma)
    return ErrorPair(err_minus=float(em), err_plus=float(ep), gamma=p.gamma)


def errors_thm3(p: TheoryParams) -> ErrorPair:
    """Natural class errors at the setup-3 optimal bias (K > 1).

    B = (eps rho_plus + eps rho_minus - 2 d eta)/(sqrt(d) sigma (K^2 - 1)),
    q = 2 log(K/Gamma)/(K^2 - 1),
    err_plus  = Phi(-K sqrt(B^2+q) - B - eps rho_plus/(sqrt(d) sigma)),
    err_minus = Phi(K B + sqrt(B^2+q) - eps rho_minus/(K sqrt(d) sigma)).
    """
    if p.K <= 1:
        raise SingularParameterError("setup 3 requires K > 1")
    _require_feasible_rho(p, [p.rho_plus, p.rho_minus])
    e, K = p.epsilon, p.K
    B = (e * p.rho_plus + e * p.rho_minus - 2 * p.d * p.eta) \
        / (p.sqrt_d_sigma * (K ** 2 - 1))
    q = 2 * math.log(K / p.gamma) / (K ** 2 - 1)
    if B ** 2 + q < 0:
        raise InfeasibleParameterError("B^2 + q < 0")
    root = math.sqrt(B ** 2 + q)
    ep = std_normal_cdf(-K * root - B - e * p.rho_plus / p.sqrt_d_sigma)
    em = std_normal_cdf(K * B + root - e * p.rho_minus / (K * p.sqrt_d_sigma))
    return ErrorPair(err_minus=float(em), err_plus=float(ep), gamma=p.gamma)


def corollary_conditions(p: TheoryParams) -> dict:
    """Boolean predicates for the three corollaries' applicability windows."""
    d, eta, e, sig, K, gamma = p.d, p.eta, p.epsilon, p.sigma, p.K, p.gamma
    cor1 = gamma < math.exp(((2 * d - 1) * eta - e) ** 2 / (2 * d * sig ** 2))
    cor2 = gamma > 1
    window = False
    if K > 1:
        lo = K * math.exp((2 * d * eta - e) ** 2 / (2 * d * K ** 2 * sig ** 2))
        hi = K * math.exp(2 * d * eta ** 2 / ((K ** 2 - 1) * sig ** 2))
        window = lo < gamma < hi
    return {
        "cor1_applies": bool(cor1),
        "cor2_applies": bool(cor2),
        "cor3_class_imbalance_window": bool(window),
        "cor3_variance_dominant": bool(K > gamma),
    }


# ---------------------------------------------------------------------------
# Oracles.


def grid_search_bias(p: TheoryParams, setup: int, lo: float = None,
                     hi: float = None, step: float = 1e-3) -> float:
    """Argmin over a bias grid of the closed-form perturbed objective."""
    if lo is None or hi is None:
        span = 5.0 * math.sqrt(p.d) * p.eta
        lo = -span if lo is None else lo
        hi = span if hi is None else hi
    grid = np.arange(lo, hi + step / 2, step)
    values = perturbed_objective(p, grid, setup)
    return float(grid[int(np.argmin(values))])


def mc_error_estimate(p: TheoryParams, b: float, n: int, rng: RngStream,
                      shifts: tuple[float, float] = (0.0, 0.0)):
    """Empirical class-conditional errors of u = sum(x) + b by sampling.

    `shifts` = (shift_plus, shift_minus) are added to u before taking the
    sign, e.g. the output of :func:`training_shifts`; leave zero for natural
    errors. Returns (ErrorPair, (se_plus, se_minus)) with binomial standard
    errors. Deterministic given the rng stream.
    """
    if n < 10_000:
        raise ValueError("need at least 1e4 samples per class")
    gen = rng.generator()
    s_plus, s_minus = shifts
    d = p.d

    chunks_p, chunks_m = [], []
    chunk = 250_000
    done = 0
    while done < n:
        m = min(chunk, n - done)
        xp = gen.normal(p.eta, p.sigma, size=(m, d)).sum(axis=1)
        xm = gen.normal(-p.eta, p.K * p.sigma, size=(m, d)).sum(axis=1)
        chunks_p.append(xp)
        chunks_m.append(xm)
        done += m
    sums_plus = np.concatenate(chunks_p)
    sums_minus = np.concatenate(chunks_m)

    err_plus = float(np.mean(sums_plus + b + s_plus < 0))
    err_minus = float(np.mean(sums_minus + b + s_minus >= 0))
    se_plus = math.sqrt(max(err_plus * (1 - err_plus), 1e-12) / n)
    se_minus = math.sqrt(max(err_minus * (1 - err_minus), 1e-12) / n)
    return ErrorPair(err_minus=err_minus, err_plus=err_plus, gamma=p.gamma), \
        (se_plus, se_minus)


def mc_grid_search_bias(p: TheoryParams, setup: int, n: int, rng: RngStream,
                        lo: float = None, hi: float = None,
                        step: float = 1e-3) -> float:
    """Argmin over a bias grid of the empirical perturbed objective.

    The per-class error counts are monotone in b, so a single sorted pass
    with searchsorted evaluates the whole grid.
    """
    if n < 10_000:
        raise ValueError("need at least 1e4 samples per class")
    if lo is None or hi is None:
        span = 5.0 * math.sqrt(p.d) * p.eta
        lo = -span if lo is None else lo
        hi = span if hi is None else hi
    gen = rng.generator()
    s_plus, s_minus = training_shifts(p, setup)
    sums_plus = np.sort(gen.normal(p.eta, p.sigma, size=(n, p.d)).sum(axis=1))
    sums_minus = np.sort(gen.normal(-p.eta, p.K * p.sigma, size=(n, p.d)).sum(axis=1))
    grid = np.arange(lo, hi + step / 2, step)
    # err_plus: count of sums_plus < -(b + s_plus); err_minus: count >= -(b + s_minus)
    n_plus_err = np.searchsorted(sums_plus, -(grid + s_plus), side="left")
    n_minus_err = n - np.searchsorted(sums_minus, -(grid + s_minus), side="left")
    objective = n_plus_err / n + p.gamma * n_minus_err / n
    return float(grid[int(np.argmin(objective))])


# ---------------------------------------------------------------------------
# Sweeps.


@dataclass(frozen=True)
class SweepRow:
    swept_param: str
    value: float
    feasible: bool
    closed_form: ErrorPair | None = None
    mc: ErrorPair | None = None
    mc_se: float | None = None


@dataclass(frozen=True)
class SweepTable:
    rows: tuple

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_CSV_HEADER)
            for r in self.rows:
                if r.feasible:
                    cf = r.closed_form
                    base = [f"{cf.err_plus:.12g}", f"{cf.err_minus:.12g}",
                            f"{cf.total:.12g}"]
                else:
                    base = ["", "", ""]
                if r.mc is not None:
                    mc = [f"{r.mc.err_plus:.12g}", f"{r.mc.err_minus:.12g}",
                          f"{r.mc_se:.6g}"]
                else:
                    mc = ["", "", ""]
                writer.writerow([r.swept_param, f"{r.value:.12g}", *base, *mc,
                                 str(r.feasible).lower()])

    def column(self, name: str) -> list:
        if name == "err_plus_cf":
            return [r.closed_form.err_plus for r in self.rows if r.feasible]
        if name == "err_minus_cf":
            return [r.closed_form.err_minus for r in self.rows if r.feasible]
        raise KeyError(name)


_ERROR_FNS = {1: errors_thm1, 2: errors_thm2, 3: errors_thm3}
_BIAS_FNS = {1: optimal_bias_thm1, 2: optimal_bias_thm2, 3: optimal_bias_thm3}


def sweep(p: TheoryParams, setup: int, swept: str, grid,
          with_mc: bool = False, mc_samples: int = 1_000_000,
          rng: RngStream | None = None) -> SweepTable:
    """Evaluate closed-form (and optionally MC) errors along a parameter grid.

    `swept` is 'rho_plus' or 'rho_minus'. Infeasible grid points are kept as
    marked rows and the sweep continues.
    """
    if swept not in ("rho_plus", "rho_minus"):
        raise ValueError("swept must be rho_plus or rho_minus")
    error_fn = _ERROR_FNS[setup]
    bias_fn = _BIAS_FNS[setup]
    rows = []
    for i, value in enumerate(grid):
        q = replace(p, **{swept: float(value)})
        try:
            cf = error_fn(q)
        except (SingularParameterError, InfeasibleParameterError):
            rows.append(SweepRow(swept, float(value), feasible=False))
            continue
        mc = mc_se = None
        if with_mc:
            stream = rng.child(rng.stream + i + 1) if rng else RngStream(0, i + 1)
            mc, (sp, sm) = mc_error_estimate(q, bias_fn(q), mc_samples, stream)
            mc_se = max(sp, sm)
        rows.append(SweepRow(swept, float(value), True, cf, mc, mc_se))
    return SweepTable(tuple(rows))
