"""The Generalized Lagrangian Katz (GLK) distribution family.

Provides validated parameters, a log-space pmf, the probability generating
function, closed-form moments, special-case classification, the Generalized
Poisson limit distribution, and inversion sampling from a cached pmf table.
All closed-form moment expressions are validated against brute-force
summation over the pmf table in the test suite.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError, TruncationWarning
from .special import log_gamma, log_rising_factorial

DEFAULT_MASS_TOLERANCE = 1e-12
DEFAULT_MAX_SUPPORT = 100_000

_PGF_TOLERANCE = 1e-14
_PGF_MAX_ITERATIONS = 10_000


@dataclass(frozen=True)
class GlkParams:
    """Parameters (a, b, c, beta) of a GLK distribution.

    Validity requires a > 0, c > 0, b >= 0 and 0 < beta < 1, which keeps
    every pmf value positive, plus kappa = 1 - beta - b * theta > 0 with
    theta = beta / c, which keeps the mean (and all moments used here)
    finite. Construction rejects anything else.
    """

    a: float
    b: float
    c: float
    beta: float

    def __post_init__(self):
        for name in ("a", "b", "c", "beta"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise DomainError(f"{name} must be a finite number")
            object.__setattr__(self, name, float(v))
        if self.a <= 0.0:
            raise DomainError("a must be > 0")
        if self.c <= 0.0:
            raise DomainError("c must be > 0")
        if self.b < 0.0:
            raise DomainError("b must be >= 0")
        if not 0.0 < self.beta < 1.0:
            raise DomainError("beta must lie in (0, 1)")
        if not self.kappa > 0.0:
            raise DomainError(
                f"kappa = 1 - beta - b*beta/c = {self.kappa:.6g} must be > 0")

    @property
    def theta(self) -> float:
        return self.beta / self.c

    @property
    def kappa(self) -> float:
        # evaluated as 1 - beta - b*(beta/c); the grouping matters when
        # b*beta/c is within an ulp of 1 - beta (e.g. the c = beta boundary)
        return 1.0 - self.beta - self.b * self.theta


@dataclass(frozen=True)
class GpParams:
    """Generalized Poisson parameters (theta, lambda), Consul-Famoye form.

    pmf: theta (theta + lambda x)^(x-1) exp(-theta - lambda x) / x!.
    Requires theta > 0 and 0 <= lambda < min(1, 1/theta); lambda < 1 keeps
    the pmf summable and lambda < 1/theta matches the admissible region of
    the GLK limit this distribution arises from.
    """

    theta: float
    lam: float

    def __post_init__(self):
        for name in ("theta", "lam"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise DomainError(f"{name} must be a finite number")
            object.__setattr__(self, name, float(v))
        if self.theta <= 0.0:
            raise DomainError("theta must be > 0")
        if not 0.0 <= self.lam < min(1.0, 1.0 / self.theta):
            raise DomainError("lambda must lie in [0, min(1, 1/theta))")


@dataclass(frozen=True)
class GlkMoments:
    """First four central moments and shape statistics of a GLK variable."""

    mean: float
    variance: float
    mu3: float
    mu4: float
    cv: float
    vmr: float
    skewness: float
    kurtosis: float


@dataclass(frozen=True)
class PmfTable:
    """Finite pmf window p_0 .. p_N with its achieved cumulative mass."""

    probs: np.ndarray
    achieved_mass: float
    truncated: bool

    def __len__(self):
        return len(self.probs)


@dataclass(frozen=True)
class FamilyTag:
    """Special-case classification of a GLK parameter tuple."""

    name: str
    params: dict = field(default_factory=dict)


def _validate_count(x) -> int:
    if isinstance(x, (bool, np.bool_)):
        raise DomainError("x must be a nonnegative integer")
    if isinstance(x, (int, np.integer)):
        xi = int(x)
    elif isinstance(x, float) and x == int(x):
        xi = int(x)
    else:
        raise DomainError("x must be a nonnegative integer")
    if xi < 0:
        raise DomainError("x must be a nonnegative integer")
    return xi


def glk_log_pmf_vector(params: GlkParams, xs) -> np.ndarray:
    """Log pmf of a GLK distribution at an array of nonnegative integers."""
    xs = np.asarray(xs, dtype=float)
    a, b, c, beta = params.a, params.b, params.c, params.beta
    r = a / c + xs * (b / c)
    return (xs * math.log(beta)
            + math.log(a / c)
            - np.log(r + xs)
            + r * math.log1p(-beta)
            + log_rising_factorial(r + 1.0, xs.astype(np.int64))
            - log_gamma(xs + 1.0))


def glk_log_pmf(params: GlkParams, x) -> float:
    """Log pmf ln p_x of the GLK distribution.

    Evaluated entirely in log space: the rising factorial in the pmf
    overflows double precision for x beyond roughly 150 otherwise.
    """
    xi = _validate_count(x)
    return float(glk_log_pmf_vector(params, np.array([xi]))[0])


def _table_from_log_pmf(log_pmf_fn, mass_tolerance, max_support) -> PmfTable:
    if not 0.0 < mass_tolerance < 1.0:
        raise DomainError("mass_tolerance must lie in (0, 1)")
    if max_support < 1:
        raise DomainError("max_support must be positive")
    target = 1.0 - mass_tolerance
    block = 256
    probs = np.empty(0)
    total = 0.0
    start = 0
    while start <= max_support:
        stop = min(start + block, max_support + 1)
        chunk = np.exp(log_pmf_fn(np.arange(start, stop)))
        cum = total + np.cumsum(chunk)
        hit = np.searchsorted(cum, target)
        if hit < len(chunk):
            probs = np.concatenate([probs, chunk[:hit + 1]])
            return PmfTable(probs=probs, achieved_mass=float(cum[hit]), truncated=False)
        probs = np.concatenate([probs, chunk])
        total = float(cum[-1])
        start = stop
        block = min(block * 2, 16384)
    return PmfTable(probs=probs, achieved_mass=total, truncated=True)


def glk_pmf_table(params: GlkParams, mass_tolerance: float = DEFAULT_MASS_TOLERANCE,
                  max_support: int = DEFAULT_MAX_SUPPORT) -> PmfTable:
    """Probabilities p_0 .. p_N covering at least 1 - mass_tolerance.

    N is the smallest index reaching the requested cumulative mass, capped
    at ``max_support``; hitting the cap sets the ``truncated`` flag instead
    of raising.
    """
    return _table_from_log_pmf(lambda xs: glk_log_pmf_vector(params, xs),
                               mass_tolerance, max_support)


def glk_truncated_pmf_recursion(a: float, b: float, c: float, beta: float,
                                max_support: int) -> np.ndarray:
    """Truncated pmf via the product recursion p_i = p_0 prod max{0, (U+Vj)/(a+j)}.

    U = a beta / c and V = U (b + c) / (a + b). Unlike the main pmf this
    recursion admits b < 0; masses are clamped to zero from the first index
    where the ratio goes negative and the finite-support window is
    renormalized to sum to one. This is an alternative construction and does
    not coincide with ``glk_log_pmf`` for general parameters; see the tests.
    """
    if a <= 0 or c <= 0 or not 0.0 < beta < 1.0:
        raise DomainError("requires a > 0, c > 0 and beta in (0, 1)")
    if a + b == 0:
        raise DomainError("a + b must be nonzero")
    if max_support < 0:
        raise DomainError("max_support must be nonnegative")
    u = a * beta / c
    v = u * (b + c) / (a + b)
    j = np.arange(max_support)
    ratios = np.maximum(0.0, (u + v * j) / (a + j))
    probs = np.concatenate([[1.0], np.cumprod(ratios)])
    return probs / probs.sum()


def glk_moments(params: GlkParams) -> GlkMoments:
    """Closed-form mean, central moments up to order four, CV, VMR, S, K.

    All expressions are in terms of kappa = 1 - beta - b beta/c and
    theta = beta/c. Skewness and kurtosis are the standardized third and
    fourth central moments mu3 / sd^3 and mu4 / var^2.
    """
    a, b, beta = params.a, params.b, params.beta
    kappa, theta = params.kappa, params.theta
    one_m_beta = 1.0 - beta
    mean = a * theta / kappa
    variance = one_m_beta * a * theta / kappa ** 3
    mu3 = (a * theta * (1.0 - 2.0 * beta) * one_m_beta / kappa ** 4
           + 3.0 * a * theta ** 2 * one_m_beta ** 2 * (b + params.c) / kappa ** 5)
    # fourth central moment, derived from the Lagrangian pgf; bt = b*beta/c
    bt = b * theta
    poly = (bt * bt * (beta ** 2 - 6.0 * beta + 6.0)
            + 2.0 * bt * (beta - 1.0) * (beta ** 2 - beta - 4.0)
            + (beta ** 4 + 2.0 * beta ** 3 - 6.0 * beta ** 2 + 2.0 * beta + 1.0))
    mu4 = 3.0 * variance ** 2 + a * theta * one_m_beta * poly / kappa ** 7
    cv = math.sqrt(one_m_beta / (a * theta * kappa))
    vmr = one_m_beta / kappa ** 2
    skewness = mu3 / variance ** 1.5
    kurtosis = mu4 / variance ** 2
    return GlkMoments(mean=mean, variance=variance, mu3=mu3, mu4=mu4,
                      cv=cv, vmr=vmr, skewness=skewness, kurtosis=kurtosis)


def glk_pgf(params: GlkParams, u: float) -> float:
    """Probability generating function H(u) = E[u^X] for u in [0, 1].

    H(u) = ((1-beta)/(1-beta z))^(a/c) where z solves the Lagrangian fixed
    point z = u ((1-beta)/(1-beta z))^(b/c). The map is a contraction on
    [0, 1] whenever kappa > 0; iteration is damped by one half whenever the
    update direction flips, and failure to reach 1e-14 within 10000
    iterations raises a numerical error.
    """
    if not 0.0 <= u <= 1.0:
        raise DomainError("u must lie in [0, 1]")
    a, b, c, beta = params.a, params.b, params.c, params.beta
    if b == 0.0:
        z = u
    else:
        z = u
        prev_delta = 0.0
        for _ in range(_PGF_MAX_ITERATIONS):
            z_new = u * ((1.0 - beta) / (1.0 - beta * z)) ** (b / c)
            delta = z_new - z
            if abs(delta) <= _PGF_TOLERANCE:
                z = z_new
                break
            if delta * prev_delta < 0.0:
                z_new = 0.5 * (z + z_new)
            prev_delta = delta
            z = z_new
        else:
            raise NumericalError("pgf fixed point did not converge")
    return ((1.0 - beta) / (1.0 - beta * z)) ** (a / c)


def _sample_from_table(table: PmfTable, rng: np.random.Generator, n: int) -> np.ndarray:
    if table.truncated:
        warnings.warn("pmf table truncated before reaching its mass tolerance",
                      TruncationWarning)
    cum = np.cumsum(table.probs)
    draws = np.searchsorted(cum, rng.random(n) * cum[-1])
    return draws.astype(np.int64)


def glk_sample(params: GlkParams, rng: np.random.Generator, n: int,
               mass_tolerance: float = DEFAULT_MASS_TOLERANCE) -> np.ndarray:
    """n independent draws by inversion against the cached pmf table."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    return _sample_from_table(glk_pmf_table(params, mass_tolerance), rng, n)


def gp_log_pmf_vector(params: GpParams, xs) -> np.ndarray:
    """Log pmf of the Generalized Poisson at an array of counts."""
    xs = np.asarray(xs, dtype=float)
    theta, lam = params.theta, params.lam
    rate = theta + lam * xs
    return (math.log(theta) + (xs - 1.0) * np.log(rate)
            - theta - lam * xs - log_gamma(xs + 1.0))


def gp_log_pmf(params: GpParams, x) -> float:
    """Log pmf ln[theta (theta + lambda x)^(x-1) e^(-theta - lambda x) / x!]."""
    xi = _validate_count(x)
    return float(gp_log_pmf_vector(params, np.array([xi]))[0])


def gp_pmf_table(params: GpParams, mass_tolerance: float = DEFAULT_MASS_TOLERANCE,
                 max_support: int = DEFAULT_MAX_SUPPORT) -> PmfTable:
    """Finite pmf window of the Generalized Poisson distribution."""
    return _table_from_log_pmf(lambda xs: gp_log_pmf_vector(params, xs),
                               mass_tolerance, max_support)


def gp_sample(params: GpParams, rng: np.random.Generator, n: int,
              mass_tolerance: float = DEFAULT_MASS_TOLERANCE) -> np.ndarray:
    """n independent Generalized Poisson draws by table inversion."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    return _sample_from_table(gp_pmf_table(params, mass_tolerance), rng, n)


def gp_moments(params: GpParams):
    """Mean and variance of the Generalized Poisson distribution."""
    theta, lam = params.theta, params.lam
    return theta / (1.0 - lam), theta / (1.0 - lam) ** 3


_CLASSIFY_TOL = 1e-12


def special_case_of(params: GlkParams) -> FamilyTag:
    """Classify a parameter tuple into the nested families it reduces to.

    b = 0 gives the Negative Binomial with r = a/c and success probability
    1 - beta; c = beta (within 1e-12) gives the Lagrangian Katz; both at
    once give the Katz distribution; anything else is general GLK.
    """
    nb = params.b == 0.0
    lk = abs(params.c - params.beta) <= _CLASSIFY_TOL
    if nb and lk:
        return FamilyTag("katz", {"a": params.a, "beta": params.beta})
    if nb:
        return FamilyTag("negative_binomial",
                         {"r": params.a / params.c, "p": 1.0 - params.beta})
    if lk:
        return FamilyTag("lagrangian_katz",
                         {"a": params.a, "b": params.b, "beta": params.beta})
    return FamilyTag("glk", {"a": params.a, "b": params.b,
                             "c": params.c, "beta": params.beta})
