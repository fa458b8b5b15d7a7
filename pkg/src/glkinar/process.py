"""The GLK-INAR(1) count process.

Binomial thinning, path simulation, the one-step transition kernel,
conditional and stationary moments, autocovariance, and aggregation of
independent processes sharing their thinning and shape parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats as _scipy_stats

from .distribution import (
    DEFAULT_MASS_TOLERANCE,
    GlkParams,
    GpParams,
    PmfTable,
    glk_log_pmf_vector,
    glk_moments,
    glk_pmf_table,
    gp_log_pmf_vector,
    gp_moments,
    gp_pmf_table,
    _sample_from_table,
)
from .errors import ConfigurationError, DomainError, NumericalError
from .special import log_gamma, log_sum_exp, stirling_tables

DEFAULT_WARMUP = 1000

_LK_TIE_TOL = 1e-12


class Variant(Enum):
    """Model family tag encoding the innovation-parameter constraints."""

    GLK = "glk"
    LK = "lk"
    NB = "nb"
    GP = "gp"


@dataclass(frozen=True)
class CountSeries:
    """An ordered sequence of nonnegative integer observations.

    Optional timestamps are kept as opaque labels; when present they must be
    strictly increasing and aligned one-to-one with the values.
    """

    values: np.ndarray
    timestamps: tuple | None = None

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 1 or vals.size == 0:
            raise DomainError("values must be a non-empty 1-d sequence")
        if not np.issubdtype(vals.dtype, np.integer):
            if not np.all(vals == np.floor(vals)):
                raise DomainError("values must be integers")
        vals = vals.astype(np.int64)
        if np.any(vals < 0):
            raise DomainError("values must be nonnegative")
        object.__setattr__(self, "values", vals)
        if self.timestamps is not None:
            ts = tuple(self.timestamps)
            if len(ts) != len(vals):
                raise DomainError("timestamps must match values in length")
            if any(ts[i] >= ts[i + 1] for i in range(len(ts) - 1)):
                raise DomainError("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class InarModel:
    """An INAR(1) model: thinning probability alpha plus innovation law.

    The variant tag records which nested family the innovation parameters
    are constrained to; construction verifies the constraint actually holds.
    """

    alpha: float
    innovation: GlkParams | GpParams
    variant: Variant = Variant.GLK

    def __post_init__(self):
        if not isinstance(self.alpha, (int, float)) or not math.isfinite(self.alpha):
            raise DomainError("alpha must be a finite number")
        object.__setattr__(self, "alpha", float(self.alpha))
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in the open interval (0, 1)")
        inn = self.innovation
        if self.variant is Variant.GP:
            if not isinstance(inn, GpParams):
                raise DomainError("GP variant requires GpParams innovation")
            return
        if not isinstance(inn, GlkParams):
            raise DomainError(f"{self.variant.value} variant requires GlkParams")
        if self.variant is Variant.NB and inn.b != 0.0:
            raise DomainError("NB variant requires b = 0")
        if self.variant is Variant.LK and abs(inn.c - inn.beta) > _LK_TIE_TOL:
            raise DomainError("LK variant requires c = beta")


@dataclass(frozen=True)
class ConditionalMoments:
    """k-step-ahead conditional mean and variance given the current state."""

    horizon: int
    mean: float
    variance: float


@dataclass(frozen=True)
class StationaryMoments:
    """Stationary moments of the process up to a requested order.

    ``raw_moments[m-1]`` holds E[X^m]. The autocovariance at lag k is
    alpha^k * variance, exposed through :meth:`autocovariance`.
    """

    alpha: float
    raw_moments: tuple
    mean: float
    variance: float
    vmr: float

    def autocovariance(self, lag: int) -> float:
        if lag < 0:
            raise DomainError("lag must be nonnegative")
        return self.alpha ** lag * self.variance


@dataclass(frozen=True)
class ChiSquareReport:
    """Two-sample chi-square comparison of count histograms."""

    statistic: float
    dof: int
    p_value: float
    n_first: int
    n_second: int


@dataclass(frozen=True)
class AggregationReport:
    """Distribution-equality check between a summed process and its pooled model."""

    chi_square: ChiSquareReport
    pooled_a: float
    path_length: int


# ---------------------------------------------------------------------------
# innovation dispatch


def innovation_log_pmf_vector(innovation, xs) -> np.ndarray:
    if isinstance(innovation, GlkParams):
        return glk_log_pmf_vector(innovation, xs)
    if isinstance(innovation, GpParams):
        return gp_log_pmf_vector(innovation, xs)
    raise DomainError("unsupported innovation type")


def innovation_pmf_table(innovation, mass_tolerance=DEFAULT_MASS_TOLERANCE) -> PmfTable:
    if isinstance(innovation, GlkParams):
        return glk_pmf_table(innovation, mass_tolerance)
    if isinstance(innovation, GpParams):
        return gp_pmf_table(innovation, mass_tolerance)
    raise DomainError("unsupported innovation type")


def innovation_mean_variance(innovation):
    if isinstance(innovation, GlkParams):
        m = glk_moments(innovation)
        return m.mean, m.variance
    if isinstance(innovation, GpParams):
        return gp_moments(innovation)
    raise DomainError("unsupported innovation type")


def _innovation_raw_moments(innovation, order: int):
    """Raw moments E[eps^m] for m = 0..order.

    Orders up to four come from the closed forms for GLK innovations; the
    Generalized Poisson falls back to summation over its pmf table beyond
    order two.
    """
    if isinstance(innovation, GlkParams):
        mom = glk_moments(innovation)
        m1 = mom.mean
        m2 = mom.variance + m1 ** 2
        m3 = mom.mu3 + 3.0 * m1 * m2 - 2.0 * m1 ** 3
        m4 = mom.mu4 + 4.0 * m1 * m3 - 6.0 * m1 ** 2 * m2 + 3.0 * m1 ** 4
        return [1.0, m1, m2, m3, m4][:order + 1]
    mean, var = gp_moments(innovation)
    out = [1.0, mean, var + mean ** 2]
    if order > 2:
        table = gp_pmf_table(innovation, 1e-14)
        xs = np.arange(len(table.probs), dtype=float)
        for m in range(3, order + 1):
            out.append(float(np.sum(xs ** m * table.probs)))
    return out[:order + 1]


# ---------------------------------------------------------------------------
# simulation


def thin(alpha: float, x: int, rng: np.random.Generator) -> int:
    """Binomial thinning: the sum of x independent Bernoulli(alpha) draws."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    if x < 0 or x != int(x):
        raise DomainError("x must be a nonnegative integer")
    return int(rng.binomial(int(x), alpha))


def simulate(model: InarModel, length: int, rng: np.random.Generator,
             initial: int | None = None, warmup: int = DEFAULT_WARMUP,
             mass_tolerance: float = DEFAULT_MASS_TOLERANCE) -> CountSeries:
    """Simulate a path of X_t = thin(alpha, X_{t-1}) + eps_t.

    With ``initial=None`` the chain starts from ceil of the stationary mean
    and a warmup stretch (default 1000 steps) is discarded, which at
    geometric mixing rate alpha is conservative for alpha <= 0.95. An
    explicit ``initial`` skips the warmup entirely.

    Parameters
    ----------
    model : InarModel
    length : int
        Number of retained observations, >= 1.
    rng : numpy.random.Generator
        Consumed sequentially; identical seeds give identical paths.
    initial : int or None
        Starting state, or None for the stationary warmup.
    warmup : int
        Discarded steps in stationary-warmup mode.
    """
    if length < 1:
        raise DomainError("length must be positive")
    if initial is None:
        mean_eps, _ = innovation_mean_variance(model.innovation)
        start = int(math.ceil(mean_eps / (1.0 - model.alpha)))
        burn = int(warmup)
    else:
        if initial < 0 or initial != int(initial):
            raise DomainError("initial must be a nonnegative integer")
        start = int(initial)
        burn = 0
    table = innovation_pmf_table(model.innovation, mass_tolerance)
    eps = _sample_from_table(table, rng, burn + length)
    x = start
    out = np.empty(burn + length, dtype=np.int64)
    alpha = model.alpha
    for t in range(burn + length):
        x = int(rng.binomial(x, alpha)) + int(eps[t])
        out[t] = x
    return CountSeries(values=out[burn:])


# ---------------------------------------------------------------------------
# transition kernel


def transition_log_prob(model: InarModel, i: int, j: int) -> float:
    """ln P(X_t = j | X_{t-1} = i) for the one-step transition kernel.

    The kernel mixes a Binomial(i, alpha) number of survivors with an
    independent innovation: sum_k C(i,k) alpha^k (1-alpha)^(i-k) p_{j-k},
    accumulated in log space.
    """
    if i < 0 or j < 0 or i != int(i) or j != int(j):
        raise DomainError("states must be nonnegative integers")
    i, j = int(i), int(j)
    alpha = model.alpha
    ks = np.arange(min(i, j) + 1)
    log_binom = (log_gamma(i + 1.0) - log_gamma(ks + 1.0)
                 - log_gamma(i - ks + 1.0))
    log_pmf = innovation_log_pmf_vector(model.innovation, j - ks)
    terms = (log_binom + ks * math.log(alpha)
             + (i - ks) * math.log1p(-alpha) + log_pmf)
    return log_sum_exp(terms)


def transition_matrix(model: InarModel, n_states: int) -> np.ndarray:
    """Dense one-step kernel over the truncated state space 0..n_states.

    Rows are exact transition probabilities into the window; mass leaking
    past the truncation boundary is simply missing, so row sums fall short
    of one by the truncated tail.
    """
    if n_states < 0:
        raise DomainError("n_states must be nonnegative")
    n = int(n_states)
    pmf = np.exp(innovation_log_pmf_vector(model.innovation, np.arange(n + 1)))
    alpha = model.alpha
    lg = log_gamma(np.arange(n + 2, dtype=float) + 1.0)
    out = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        ks = np.arange(i + 1)
        w = np.exp(lg[i] - lg[ks] - lg[i - ks]
                   + ks * math.log(alpha) + (i - ks) * math.log1p(-alpha))
        for k in range(i + 1):
            out[i, k:] += w[k] * pmf[:n + 1 - k]
    return out


def stationary_distribution(model: InarModel, n_states: int | None = None,
                            tol: float = 1e-15, max_iterations: int = 100_000) -> np.ndarray:
    """Stationary distribution of the truncated kernel by power iteration.

    The default window scales the innovation support by 1/(1-alpha), since
    the stationary mean exceeds the innovation mean by that factor.
    """
    if n_states is None:
        table = innovation_pmf_table(model.innovation)
        n_states = int(math.ceil((len(table) - 1) / (1.0 - model.alpha))) + 10
    kernel = transition_matrix(model, n_states)
    pi = np.full(n_states + 1, 1.0 / (n_states + 1))
    for _ in range(max_iterations):
        nxt = pi @ kernel
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    raise NumericalError("power iteration did not converge")


# ---------------------------------------------------------------------------
# moments


def conditional_moments(model: InarModel, x_t: int, k: int) -> ConditionalMoments:
    """Mean and variance of X_{t+k} given X_t = x_t.

    mean = alpha^k x_t + (1 - alpha^k)/(1 - alpha) * mu_eps. The geometric
    factor uses exponent k, which reproduces the exact one-step conditional
    mean at k = 1 and the stationary limit as k grows.
    """
    if x_t < 0 or x_t != int(x_t):
        raise DomainError("x_t must be a nonnegative integer")
    if k < 1 or k != int(k):
        raise DomainError("horizon k must be a positive integer")
    alpha = model.alpha
    mean_eps, var_eps = innovation_mean_variance(model.innovation)
    ak = alpha ** k
    a2k = alpha ** (2 * k)
    geo_k = (1.0 - ak) / (1.0 - alpha)
    geo_2k = (1.0 - a2k) / (1.0 - alpha ** 2)
    mean = ak * x_t + geo_k * mean_eps
    variance = (ak - a2k) * x_t + geo_2k * (var_eps - mean_eps) + geo_k * mean_eps
    return ConditionalMoments(horizon=int(k), mean=mean, variance=variance)


def stationary_moments(model: InarModel, max_order: int = 4) -> StationaryMoments:
    """Stationary raw moments up to ``max_order`` (at most four).

    Order one and two have direct closed forms; orders three and four run
    the falling-factorial recursion
    mu_X^(m) = (1 - alpha^m)^-1 sum_k C(m,k) alpha^k mu_X^(k) mu_eps^(m-k)
    with raw/falling conversions through the exact Stirling tables.
    """
    if max_order != int(max_order) or not 1 <= max_order <= 4:
        raise ConfigurationError("max_order must be an integer in [1, 4]")
    max_order = int(max_order)
    alpha = model.alpha
    eps_raw = _innovation_raw_moments(model.innovation, max_order)
    table = stirling_tables(max(max_order, 1))
    eps_falling = table.falling_from_raw(eps_raw)
    x_falling = [1.0]
    for m in range(1, max_order + 1):
        total = sum(math.comb(m, k) * alpha ** k * x_falling[k] * eps_falling[m - k]
                    for k in range(m))
        x_falling.append(total / (1.0 - alpha ** m))
    x_raw = table.raw_from_falling(x_falling)
    mean = eps_raw[1] / (1.0 - alpha)
    var_eps = eps_raw[2] - eps_raw[1] ** 2 if max_order >= 2 else None
    if max_order >= 2:
        variance = (var_eps + alpha * eps_raw[1]) / (1.0 - alpha ** 2)
    else:
        _, ve = innovation_mean_variance(model.innovation)
        variance = (ve + alpha * eps_raw[1]) / (1.0 - alpha ** 2)
    vmr = variance / mean
    return StationaryMoments(alpha=alpha, raw_moments=tuple(x_raw[1:]),
                             mean=mean, variance=variance, vmr=vmr)


# ---------------------------------------------------------------------------
# aggregation


def two_sample_chi_square(first, second, min_expected: float = 5.0) -> ChiSquareReport:
    """Pearson chi-square homogeneity test between two count samples.

    Counts are binned on the union of observed values and adjacent bins are
    merged until every pooled expected count reaches ``min_expected``.
    """
    first = np.asarray(first, dtype=np.int64)
    second = np.asarray(second, dtype=np.int64)
    if first.size == 0 or second.size == 0:
        raise DomainError("both samples must be non-empty")
    hi = int(max(first.max(), second.max()))
    c1 = np.bincount(first, minlength=hi + 1).astype(float)
    c2 = np.bincount(second, minlength=hi + 1).astype(float)
    pooled = c1 + c2
    # merge adjacent bins left to right until each merged bin is big enough
    bins1, bins2 = [], []
    acc1 = acc2 = accp = 0.0
    for v in range(hi + 1):
        acc1 += c1[v]
        acc2 += c2[v]
        accp += pooled[v]
        if accp >= min_expected:
            bins1.append(acc1)
            bins2.append(acc2)
            acc1 = acc2 = accp = 0.0
    if accp > 0 and bins1:
        bins1[-1] += acc1
        bins2[-1] += acc2
    if len(bins1) < 2:
        raise DomainError("too few occupied bins for a chi-square test")
    obs = np.array([bins1, bins2])
    stat, p, dof, _ = _scipy_stats.chi2_contingency(obs, correction=False)
    return ChiSquareReport(statistic=float(stat), dof=int(dof), p_value=float(p),
                           n_first=int(first.size), n_second=int(second.size))


def aggregate(models, rng: np.random.Generator, length: int = 100_000,
              warmup: int = DEFAULT_WARMUP) -> AggregationReport:
    """Check closure under aggregation of independent processes.

    All models must share alpha, b, c and beta and carry GLK innovations.
    The pointwise sum Y_t of independent paths is compared against a single
    path of the pooled model (a = sum of the components' a) through a
    two-sample chi-square on the marginal histograms.
    """
    models = list(models)
    if len(models) < 1:
        raise DomainError("at least one model is required")
    head = models[0]
    if not isinstance(head.innovation, GlkParams):
        raise DomainError("aggregation is defined for GLK innovations")
    for m in models[1:]:
        if not isinstance(m.innovation, GlkParams):
            raise DomainError("aggregation is defined for GLK innovations")
        same = (m.alpha == head.alpha
                and m.innovation.b == head.innovation.b
                and m.innovation.c == head.innovation.c
                and m.innovation.beta == head.innovation.beta)
        if not same:
            raise DomainError("models must share alpha, b, c and beta")
    total = np.zeros(length, dtype=np.int64)
    for m in models:
        total += simulate(m, length, rng, warmup=warmup).values
    pooled_a = float(sum(m.innovation.a for m in models))
    pooled = InarModel(
        alpha=head.alpha,
        innovation=GlkParams(a=pooled_a, b=head.innovation.b,
                             c=head.innovation.c, beta=head.innovation.beta))
    ref = simulate(pooled, length, rng, warmup=warmup).values
    return AggregationReport(chi_square=two_sample_chi_square(total, ref),
                             pooled_a=pooled_a, path_length=length)
