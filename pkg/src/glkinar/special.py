"""Numerically stable special-function and combinatorial kernels.

Everything in this module is a pure function of its inputs; the Stirling
tables are built once per process and cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DomainError

_LOG_TWO_PI = math.log(2.0 * math.pi)

# Asymptotic (Stirling) series coefficients B_{2n} / (2n (2n-1)) for ln Gamma.
# Truncated after the x^-15 term; remainder < 1e-19 for x >= 13.
_STIRLING_SERIES = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_SERIES_CUTOFF = 13.0

MAX_STIRLING_ORDER = 30


def log_gamma(x):
    """Natural log of the gamma function for positive arguments.

    Uses the argument-shift recurrence ln Gamma(x) = ln Gamma(x+1) - ln x to
    push the argument above 13, then the Stirling asymptotic series with the
    coefficient set above. Relative accuracy is better than 1e-13 over
    (0, 1e6); validated against high-precision references in the tests.

    Parameters
    ----------
    x : float or ndarray
        Strictly positive, finite argument(s).

    Returns
    -------
    float or ndarray
        ln Gamma(x), scalar for scalar input.
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or not np.all(arr > 0.0)):
        raise DomainError("log_gamma requires finite x > 0")
    y = np.atleast_1d(arr).astype(float, copy=True)
    shift = np.zeros_like(y)
    for _ in range(int(_SERIES_CUTOFF)):
        low = y < _SERIES_CUTOFF
        if not low.any():
            break
        shift[low] -= np.log(y[low])
        y[low] += 1.0
    z = 1.0 / (y * y)
    series = np.full_like(y, _STIRLING_SERIES[-1])
    for coeff in _STIRLING_SERIES[-2::-1]:
        series = coeff + z * series
    out = (y - 0.5) * np.log(y) - y + 0.5 * _LOG_TWO_PI + series / y + shift
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def log_rising_factorial(x, k):
    """ln of the rising factorial x (x+1) ... (x+k-1), with (x)_0 = 1.

    Parameters
    ----------
    x : float or ndarray
        Strictly positive base(s).
    k : int or ndarray
        Nonnegative integer number of factors.

    Returns
    -------
    float or ndarray
    """
    xa = np.asarray(x, dtype=float)
    ka = np.asarray(k)
    if ka.size and (not np.issubdtype(ka.dtype, np.integer)
                    and not np.all(ka == np.floor(ka))):
        raise DomainError("k must be a nonnegative integer")
    kf = np.asarray(ka, dtype=float)
    if kf.size and np.any(kf < 0):
        raise DomainError("k must be a nonnegative integer")
    if xa.size and (not np.all(np.isfinite(xa)) or not np.all(xa > 0.0)):
        raise DomainError("log_rising_factorial requires x > 0")
    out = log_gamma(xa + kf) - log_gamma(xa)
    out = np.where(kf == 0, 0.0, out)
    if np.ndim(x) == 0 and np.ndim(k) == 0:
        return float(out)
    return out


def log_binomial(n, k):
    """ln of the binomial coefficient C(n, k) for 0 <= k <= n."""
    na = np.asarray(n, dtype=float)
    ka = np.asarray(k, dtype=float)
    if np.any(ka < 0) or np.any(ka > na):
        raise DomainError("log_binomial requires 0 <= k <= n")
    out = log_gamma(na + 1.0) - log_gamma(ka + 1.0) - log_gamma(na - ka + 1.0)
    if np.ndim(n) == 0 and np.ndim(k) == 0:
        return float(out)
    return out


def log_sum_exp(values):
    """ln sum exp(v_i), stabilized against the maximum element.

    An all-(-inf) input returns -inf; an empty input is a domain error.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise DomainError("log_sum_exp of an empty sequence")
    m = np.max(arr)
    if not np.isfinite(m):
        if m == -np.inf:
            return -np.inf
        raise DomainError("log_sum_exp requires a finite or -inf maximum")
    return float(m + np.log(np.sum(np.exp(arr - m))))


@dataclass(frozen=True)
class StirlingTable:
    """Triangular tables of Stirling numbers, exact integer arithmetic.

    ``first_kind[m][k]`` holds the signed number s(m, k) and
    ``second_kind[m][k]`` holds S(m, k), for 0 <= k <= m <= max_order.
    """

    max_order: int
    first_kind: tuple
    second_kind: tuple

    def falling_from_raw(self, raw_moments):
        """Falling-factorial moments from raw moments of the same variable.

        ``raw_moments[j]`` must hold E[X^j] for j = 0 .. m; the result lists
        E[(X)_j] = E[X (X-1) ... (X-j+1)] over the same orders.
        """
        m = len(raw_moments) - 1
        if m > self.max_order:
            raise ConfigurationError(f"table only covers order {self.max_order}")
        return [
            float(sum(self.first_kind[j][k] * raw_moments[k] for k in range(j + 1)))
            for j in range(m + 1)
        ]

    def raw_from_falling(self, falling_moments):
        """Raw moments from falling-factorial moments (inverse conversion)."""
        m = len(falling_moments) - 1
        if m > self.max_order:
            raise ConfigurationError(f"table only covers order {self.max_order}")
        return [
            float(sum(self.second_kind[j][k] * falling_moments[k] for k in range(j + 1)))
            for j in range(m + 1)
        ]


@lru_cache(maxsize=None)
def stirling_tables(max_order: int) -> StirlingTable:
    """Build (and cache) Stirling number tables up to ``max_order``.

    Recurrences, evaluated in exact integer arithmetic:
    s(m+1, k) = s(m, k-1) - m s(m, k) and S(m+1, k) = S(m, k-1) + k S(m, k).
    """
    if not isinstance(max_order, int) or max_order < 1 or max_order > MAX_STIRLING_ORDER:
        raise ConfigurationError(
            f"max_order must be an integer in [1, {MAX_STIRLING_ORDER}]")
    first = [[1]]
    second = [[1]]
    for m in range(max_order):
        prev_s, prev_S = first[m], second[m]
        row_s = [0] * (m + 2)
        row_S = [0] * (m + 2)
        for k in range(m + 2):
            s_left = prev_s[k - 1] if 1 <= k <= m + 1 else 0
            s_same = prev_s[k] if k <= m else 0
            row_s[k] = s_left - m * s_same
            S_left = prev_S[k - 1] if 1 <= k <= m + 1 else 0
            S_same = prev_S[k] if k <= m else 0
            row_S[k] = S_left + k * S_same
        first.append(row_s)
        second.append(row_S)
    return StirlingTable(
        max_order=max_order,
        first_kind=tuple(tuple(r) for r in first),
        second_kind=tuple(tuple(r) for r in second),
    )
