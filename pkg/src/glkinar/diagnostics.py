"""Chain-quality statistics and model-comparison scores.

Autocorrelations, effective sample size and inefficiency, batch-means
numerical standard errors, Geweke's convergence diagnostic, the deviance
information criterion, and two log marginal likelihood estimators.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

from .errors import ConfigurationError, DiagnosticsError, InadmissibleEstimateWarning
from .inference import (
    PosteriorDraws,
    PriorSpec,
    SeriesWorkspace,
    model_from_theta,
    reparametrize,
)
from .process import CountSeries
from .special import log_sum_exp

MIN_CHAIN_LENGTH = 100
MIN_MARGINAL_DRAWS = 500
MIN_WEIGHT_ESS = 50.0


def acf(chain, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 0..max_lag, biased normalization.

    rho_k = sum_t (x_t - xbar)(x_{t+k} - xbar) / sum_t (x_t - xbar)^2, so
    the lag-0 value is exactly one. A constant chain has no autocorrelation
    and raises instead of propagating NaN.
    """
    x = np.asarray(chain, dtype=float)
    if x.ndim != 1:
        raise ConfigurationError("chain must be one-dimensional")
    if max_lag < 0 or max_lag != int(max_lag):
        raise ConfigurationError("max_lag must be a nonnegative integer")
    if len(x) <= max_lag:
        raise ConfigurationError("chain must be longer than max_lag")
    v = x - x.mean()
    denom = float(np.dot(v, v))
    if denom == 0.0:
        raise DiagnosticsError("autocorrelation of a constant chain is undefined")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(np.dot(v[:-k], v[k:])) / denom
    return out


def ess_and_ineff(chain):
    """Effective-sample-size ratio and inefficiency factor of a chain.

    ineff = 1 + 2 sum_k rho_k, summing the autocorrelations of the initial
    positive sequence (stop at the first nonpositive estimate), and
    ess_ratio = 1 / ineff, so the two are exact reciprocals.
    """
    x = np.asarray(chain, dtype=float)
    if len(x) < MIN_CHAIN_LENGTH:
        raise DiagnosticsError(f"chain must have at least {MIN_CHAIN_LENGTH} points")
    v = x - x.mean()
    denom = float(np.dot(v, v))
    if denom == 0.0:
        raise DiagnosticsError("inefficiency of a constant chain is undefined")
    total = 0.0
    for k in range(1, len(x) - 1):
        r = float(np.dot(v[:-k], v[k:])) / denom
        if r <= 0.0:
            break
        total += r
    ineff = 1.0 + 2.0 * total
    return 1.0 / ineff, ineff


def nse(chain) -> float:
    """Batch-means numerical standard error of the chain mean.

    The chain is split into floor(sqrt(N)) equal batches (remainder
    dropped); the spread of the batch means estimates the Monte-Carlo
    error of the overall mean.
    """
    x = np.asarray(chain, dtype=float)
    n = len(x)
    if n < MIN_CHAIN_LENGTH:
        raise DiagnosticsError(f"chain must have at least {MIN_CHAIN_LENGTH} points")
    n_batches = int(math.isqrt(n))
    batch_len = n // n_batches
    means = x[:n_batches * batch_len].reshape(n_batches, batch_len).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def geweke(chain, first_fraction: float = 0.1, last_fraction: float = 0.5):
    """Geweke convergence diagnostic comparing early and late chain means.

    z = (mean_first - mean_last) / sqrt(nse_first^2 + nse_last^2) with a
    two-sided normal p-value. The windows must not overlap.
    """
    x = np.asarray(chain, dtype=float)
    if not 0.0 < first_fraction < 1.0 or not 0.0 < last_fraction < 1.0:
        raise ConfigurationError("window fractions must lie in (0, 1)")
    n = len(x)
    n_first = int(math.floor(first_fraction * n))
    n_last = int(math.floor(last_fraction * n))
    if n_first + n_last > n:
        raise ConfigurationError("Geweke windows overlap")
    first = x[:n_first]
    last = x[n - n_last:]
    se = math.sqrt(nse(first) ** 2 + nse(last) ** 2)
    if se == 0.0:
        raise DiagnosticsError("Geweke statistic undefined for constant windows")
    z = float((first.mean() - last.mean()) / se)
    p = float(math.erfc(abs(z) / math.sqrt(2.0)))
    return z, p


@dataclass(frozen=True)
class ChainDiagnostics:
    """Per-parameter chain statistics, keyed by parameter name."""

    acf: dict
    ess_ratio: dict
    ineff: dict
    nse: dict
    geweke_z: dict
    geweke_p: dict
    acceptance_rate: float | None = None


def chain_diagnostics(chain_matrix, names, lags=(1, 5, 10),
                      acceptance_rate=None, first_fraction=0.1,
                      last_fraction=0.5) -> ChainDiagnostics:
    """Bundle the scalar diagnostics for each column of a chain matrix."""
    matrix = np.asarray(chain_matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    if matrix.shape[1] != len(names):
        raise ConfigurationError("one name per chain column is required")
    lags = tuple(int(l) for l in lags)
    acf_map, essr, ineff_map, nse_map, gz, gp = {}, {}, {}, {}, {}, {}
    for i, name in enumerate(names):
        col = matrix[:, i]
        rho = acf(col, max(lags) if lags else 0)
        acf_map[name] = {lag: float(rho[lag]) for lag in lags}
        e, ine = ess_and_ineff(col)
        essr[name] = e
        ineff_map[name] = ine
        nse_map[name] = nse(col)
        z, p = geweke(col, first_fraction, last_fraction)
        gz[name] = z
        gp[name] = p
    return ChainDiagnostics(acf=acf_map, ess_ratio=essr, ineff=ineff_map,
                            nse=nse_map, geweke_z=gz, geweke_p=gp,
                            acceptance_rate=acceptance_rate)


# ---------------------------------------------------------------------------
# model comparison


@dataclass(frozen=True)
class ModelScore:
    """Fit scores of one model on one dataset."""

    dic: float
    log_marginal_likelihood: float
    log_marginal_harmonic: float
    mean_log_likelihood: float
    log_likelihood_at_estimate: float
    estimate_fallback: bool
    marginal_flagged: bool


def _estimate_theta(draws: PosteriorDraws):
    """Posterior-mean estimate, falling back to the best retained draw.

    Averaging can leave the admissible region (kappa <= 0); the fallback is
    the retained draw with the highest posterior, with a warning.
    """
    theta_hat = draws.draws.mean(axis=0)
    try:
        model_from_theta(theta_hat, draws.variant)
        return theta_hat, False
    except Exception:
        warnings.warn("posterior mean is inadmissible; using the highest-"
                      "posterior retained draw", InadmissibleEstimateWarning)
        best = int(np.argmax(draws.log_posteriors))
        return draws.draws[best], True


def dic(draws: PosteriorDraws, data: CountSeries) -> float:
    """Deviance information criterion.

    DIC = -(4/N) sum_j log p(X | theta_j) + 2 log p(X | theta_hat) over the
    retained draws, with theta_hat the posterior mean (or the highest-
    posterior draw when the mean is inadmissible). Lower is better.
    """
    if len(draws) == 0:
        raise DiagnosticsError("no retained draws")
    theta_hat, _ = _estimate_theta(draws)
    ws = SeriesWorkspace(data)
    ll_hat = ws.log_likelihood(model_from_theta(theta_hat, draws.variant))
    return float(-4.0 * draws.log_likelihoods.mean() + 2.0 * ll_hat)


def gelfand_dey_log_marginal(eta_draws, log_posts, coverage: float = 0.95):
    """Gelfand-Dey estimator of the log marginal likelihood.

    Uses a multivariate-normal weighting density fitted to the draws and
    truncated to its ``coverage`` ellipsoid:
    log m = -log mean_j [ g(eta_j) / exp(log_post_j) ].
    Returns the estimate together with the effective sample size of the
    importance weights.
    """
    eta = np.atleast_2d(np.asarray(eta_draws, dtype=float))
    if eta.shape[0] == 1 and eta.shape[1] > 1 and np.ndim(eta_draws) == 1:
        eta = eta.T
    log_posts = np.asarray(log_posts, dtype=float)
    n, q = eta.shape
    mean = eta.mean(axis=0)
    cov = np.atleast_2d(np.cov(eta.T)) + 1e-10 * np.eye(q)
    centered = eta - mean
    solved = np.linalg.solve(cov, centered.T).T
    maha = np.sum(centered * solved, axis=1)
    threshold = float(_scipy_stats.chi2.ppf(coverage, df=q))
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise DiagnosticsError("weighting covariance is not positive definite")
    log_g = np.where(
        maha <= threshold,
        -math.log(coverage) - 0.5 * (q * math.log(2.0 * math.pi) + logdet + maha),
        -np.inf)
    log_w = log_g - log_posts
    log_mean_w = log_sum_exp(log_w) - math.log(n)
    finite = np.isfinite(log_w)
    if not finite.any():
        raise DiagnosticsError("all importance weights vanished")
    w = np.exp(log_w[finite] - log_w[finite].max())
    w /= w.sum()
    weight_ess = float(1.0 / np.sum(w ** 2))
    return float(-log_mean_w), weight_ess


def harmonic_mean_log_marginal(log_likelihoods) -> float:
    """Naive harmonic-mean estimator, reported for cross-checking only."""
    ll = np.asarray(log_likelihoods, dtype=float)
    return float(-(log_sum_exp(-ll) - math.log(len(ll))))


@dataclass(frozen=True)
class LogMarginalEstimate:
    """Gelfand-Dey and harmonic-mean log marginal likelihood estimates."""

    gelfand_dey: float
    harmonic_mean: float
    weight_ess: float
    flagged: bool


def log_marginal_likelihood(draws: PosteriorDraws, data: CountSeries,
                            prior: PriorSpec) -> LogMarginalEstimate:
    """Log marginal likelihood of a fitted model.

    The primary estimate is Gelfand-Dey over the unconstrained draws; the
    harmonic-mean estimate is kept alongside so discrepancies stay visible.
    The result is flagged when the effective sample size of the importance
    weights drops below 50.
    """
    if len(draws) < MIN_MARGINAL_DRAWS:
        raise DiagnosticsError(
            f"at least {MIN_MARGINAL_DRAWS} retained draws are required")
    eta = reparametrize(draws.draws, draws.variant)
    gd, weight_ess = gelfand_dey_log_marginal(eta, draws.log_posteriors)
    hm = harmonic_mean_log_marginal(draws.log_likelihoods)
    return LogMarginalEstimate(gelfand_dey=gd, harmonic_mean=hm,
                               weight_ess=weight_ess,
                               flagged=weight_ess < MIN_WEIGHT_ESS)


def model_score(draws: PosteriorDraws, data: CountSeries,
                prior: PriorSpec) -> ModelScore:
    """DIC, log marginal likelihood and the log-likelihood summaries."""
    theta_hat, fallback = _estimate_theta(draws)
    ws = SeriesWorkspace(data)
    ll_hat = ws.log_likelihood(model_from_theta(theta_hat, draws.variant))
    mean_ll = float(draws.log_likelihoods.mean())
    dic_value = float(-4.0 * mean_ll + 2.0 * ll_hat)
    lml = log_marginal_likelihood(draws, data, prior)
    return ModelScore(dic=dic_value,
                      log_marginal_likelihood=lml.gelfand_dey,
                      log_marginal_harmonic=lml.harmonic_mean,
                      mean_log_likelihood=mean_ll,
                      log_likelihood_at_estimate=float(ll_hat),
                      estimate_fallback=fallback,
                      marginal_flagged=lml.flagged)
