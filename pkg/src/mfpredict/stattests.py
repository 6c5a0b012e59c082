"""Descriptive statistics, diagnostic tests and OLS with Newey-West errors.

Everything is written against numpy/scipy directly.  The only borrowed
piece is the MacKinnon (1994, 2010) response surface for Dickey-Fuller
p-values, taken from statsmodels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .exceptions import DegenerateInputError, InsufficientDataError

ADF_PVALUE_FLOOR = 0.001
ADF_PVALUE_CEIL = 0.999


@dataclass(frozen=True)
class StatSummary:
    mean: float
    median: float
    max: float
    min: float
    stdev: float
    skew: float
    kurt: float  # raw kurtosis, 3 for a normal
    n: int
    degenerate: bool = False  # zero variance: skew and kurt are NaN


@dataclass(frozen=True)
class TestResult:
    statistic: float
    pvalue: float
    lags: int = 0
    aux: dict[str, float] = field(default_factory=dict)

    __test__ = False  # not a pytest class


@dataclass(frozen=True, eq=False)
class RegressionFit:
    names: tuple[str, ...]
    coefficients: dict[str, float]
    hac_se: dict[str, float]
    tstats: dict[str, float]
    pvalues: dict[str, float]
    r2: float
    r2_adj: float
    nobs: int
    nw_lag: int
    resid: np.ndarray = field(repr=False)


def _as_1d(x, name: str = "x") -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def _require_variance(x: np.ndarray, name: str = "series") -> None:
    if x.size == 0 or np.ptp(x) == 0:
        raise DegenerateInputError(f"{name} has zero variance")


def _check_rank(X: np.ndarray) -> None:
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise DegenerateInputError("design matrix has an all-zero column")
    sv = np.linalg.svd(X / norms, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise DegenerateInputError("design matrix is rank deficient (collinear regressors)")


def _ols_rss(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    _check_rank(X)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return beta, y - X @ beta


def describe(x) -> StatSummary:
    """Moments use central sample moments ``m_k``; ``stdev`` uses ``n - 1``."""
    a = _as_1d(x)
    n = a.size
    if n < 2:
        raise InsufficientDataError("describe needs at least 2 observations")
    mean = float(a.mean())
    d = a - mean
    m2 = float(np.mean(d**2))
    degenerate = np.ptp(a) == 0 or m2 == 0
    if degenerate:
        skew = kurt = math.nan
        stdev = 0.0
    else:
        skew = float(np.mean(d**3) / m2**1.5)
        kurt = float(np.mean(d**4) / m2**2)
        stdev = float(np.sqrt(np.sum(d**2) / (n - 1)))
    return StatSummary(mean, float(np.median(a)), float(a.max()), float(a.min()), stdev, skew, kurt, n, bool(degenerate))


def pearson_with_p(x, y) -> TestResult:
    """Pearson correlation with a two-sided Student-t(n-2) p-value."""
    a, b = _as_1d(x, "x"), _as_1d(y, "y")
    if a.size != b.size:
        raise ValueError("x and y must have equal length")
    n = a.size
    if n < 3:
        raise InsufficientDataError("correlation test needs n >= 3")
    _require_variance(a, "x")
    _require_variance(b, "y")
    da, db = a - a.mean(), b - b.mean()
    r = float(da @ db / np.sqrt((da @ da) * (db @ db)))
    r = min(max(r, -1.0), 1.0)
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = float(2 * stats.t.sf(abs(t), n - 2))
    return TestResult(r, p, aux={"n": n})


def acf(x, lag: int) -> float:
    """Sample autocorrelation: overall-mean centring, lag-0 variance normalization."""
    a = _as_1d(x)
    lag = int(lag)
    if lag < 0 or lag >= a.size:
        raise ValueError(f"lag must satisfy 0 <= lag < n ({a.size})")
    _require_variance(a)
    d = a - a.mean()
    return float(d[lag:] @ d[: d.size - lag] / (d @ d))


def acf_test(x, lag: int) -> TestResult:
    """Autocorrelation with a two-sided normal p-value (standard error ``1/sqrt(n)``)."""
    rho = acf(x, lag)
    n = np.asarray(x).size
    return TestResult(rho, float(2 * stats.norm.sf(abs(rho) * math.sqrt(n))), lags=int(lag))


def _acf_all(d: np.ndarray, nlags: int) -> np.ndarray:
    denom = d @ d
    return np.array([d[k:] @ d[: d.size - k] for k in range(1, nlags + 1)]) / denom


def ljung_box(x, L: int) -> TestResult:
    """``Q = n (n + 2) sum_{k<=L} rho_k^2 / (n - k)`` against chi-square(L)."""
    a = _as_1d(x)
    n, L = a.size, int(L)
    if L < 1 or L >= n / 2:
        raise ValueError(f"Ljung-Box lag must satisfy 1 <= L < n/2 (n={n})")
    _require_variance(a)
    rho = _acf_all(a - a.mean(), L)
    k = np.arange(1, L + 1)
    q = float(n * (n + 2) * np.sum(rho**2 / (n - k)))
    return TestResult(q, float(stats.chi2.sf(q, L)), lags=L)


def _lagmat(x: np.ndarray, lags: int, start: int) -> np.ndarray:
    """Columns ``x[t-1], ..., x[t-lags]`` for ``t = start .. len(x)-1``."""
    n = x.size
    return np.column_stack([x[start - j : n - j] for j in range(1, lags + 1)]) if lags else np.empty((n - start, 0))


def default_adf_max_lag(n: int) -> int:
    return int(math.ceil(12.0 * (n / 100.0) ** 0.25))


def adf_test(x, max_lag: int | None = None) -> TestResult:
    """Augmented Dickey-Fuller test with intercept and SIC lag choice.

    Candidate lags ``0..max_lag`` are compared on the common sample that
    ``max_lag`` leaves; the chosen lag is then re-estimated on all usable
    observations.  The reported statistic is the t-ratio of the lagged
    level; p-values come from MacKinnon's surfaces clamped to
    ``[0.001, 0.999]``.  ``aux`` holds ``chosen_lag``, ``nobs`` and ``sic``.
    """
    from statsmodels.tsa.adfvalues import mackinnonp

    a = _as_1d(x)
    n = a.size
    if max_lag is None:
        max_lag = min(default_adf_max_lag(n), max(0, n // 2 - 3))
    max_lag = int(max_lag)
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if n < max_lag + 10:
        raise InsufficientDataError(f"ADF with max_lag={max_lag} needs n >= {max_lag + 10}, got {n}")
    dx = np.diff(a)

    def design(p: int, start: int):
        # rows t = start .. len(dx)-1 in dx indexing; level x[t] precedes dx[t]
        X = np.column_stack((np.ones(dx.size - start), a[start : n - 1], _lagmat(dx, p, start)))
        return dx[start:], X

    best_lag, best_sic = 0, math.inf
    for p in range(max_lag + 1):
        y, X = design(p, max_lag)
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        # rounding-level residuals would otherwise dominate the comparison
        rss = max(float(np.sum((y - X @ beta) ** 2)), 1e-20 * float(y @ y), 1e-300)
        m = y.size
        sic = math.log(rss / m) + X.shape[1] * math.log(m) / m
        if sic < best_sic - 1e-12:
            best_lag, best_sic = p, sic

    y, X = design(best_lag, best_lag)
    _check_rank(X)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    m, k = X.shape
    rss = float(resid @ resid)
    aux = {"chosen_lag": float(best_lag), "nobs": float(m), "sic": best_sic}
    scale = float(y @ y) + 1e-300
    if rss <= 1e-20 * scale:
        # exact fit: the t-ratio is 0/0; a vanishing level coefficient is a unit root
        level_effect = abs(beta[1]) * float(np.std(X[:, 1]))
        stat = 0.0 if level_effect <= 1e-10 * math.sqrt(scale / m) else math.copysign(math.inf, beta[1])
        aux["perfect_fit"] = 1.0
    else:
        cov = rss / (m - k) * np.linalg.inv(X.T @ X)
        stat = float(beta[1] / math.sqrt(cov[1, 1]))
    p = float(mackinnonp(stat, regression="c", N=1)) if math.isfinite(stat) else (0.0 if stat < 0 else 1.0)
    p = min(max(p, ADF_PVALUE_FLOOR), ADF_PVALUE_CEIL)
    return TestResult(stat, p, lags=best_lag, aux=aux)


def arch_lm(x, L: int) -> TestResult:
    """Engle's ARCH test in F form.

    Squared demeaned values are regressed on a constant and ``L`` of their own
    lags; the statistic tests the lag block jointly against ``F(L, n-2L-1)``.
    """
    a = _as_1d(x)
    n, L = a.size, int(L)
    if L < 1:
        raise ValueError("ARCH lag must be >= 1")
    if n <= 2 * L + 2:
        raise InsufficientDataError(f"ARCH({L}) needs n > {2 * L + 2}")
    _require_variance(a)
    u = (a - a.mean()) ** 2
    _require_variance(u, "squared series")
    y = u[L:]
    X = np.column_stack((np.ones(y.size), _lagmat(u, L, L)))
    _, resid = _ols_rss(y, X)
    rss_u = float(resid @ resid)
    rss_r = float(np.sum((y - y.mean()) ** 2))
    df2 = y.size - L - 1
    F = max((rss_r - rss_u) / L / (rss_u / df2), 0.0)
    return TestResult(F, float(stats.f.sf(F, L, df2)), lags=L, aux={"df1": float(L), "df2": float(df2)})


def granger(x, y, lag: int = 1) -> TestResult:
    """F-test that lags of ``x`` add nothing to an autoregression of ``y``.

    Restricted: ``y_t`` on a constant and ``y_{t-1..t-lag}``; unrestricted adds
    ``x_{t-1..t-lag}``.  Observations whose design row has a non-finite entry
    are dropped, which keeps lag alignment intact around gaps.
    """
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    lag = int(lag)
    if lag < 1:
        raise ValueError("lag must be >= 1")
    target = b[lag:]
    ylags, xlags = _lagmat(b, lag, lag), _lagmat(a, lag, lag)
    keep = np.isfinite(target) & np.all(np.isfinite(ylags), axis=1) & np.all(np.isfinite(xlags), axis=1)
    target, ylags, xlags = target[keep], ylags[keep], xlags[keep]
    m = target.size
    df2 = m - 2 * lag - 1
    if df2 < 1:
        raise InsufficientDataError(f"Granger test with lag {lag} needs more than {2 * lag + 1} usable rows")
    ones = np.ones((m, 1))
    _, r_res = _ols_rss(target, np.hstack((ones, ylags)))
    _, u_res = _ols_rss(target, np.hstack((ones, ylags, xlags)))
    rss_r, rss_u = float(r_res @ r_res), float(u_res @ u_res)
    if rss_u <= 0:
        raise DegenerateInputError("unrestricted Granger regression fits exactly")
    F = max((rss_r - rss_u) / lag / (rss_u / df2), 0.0)
    return TestResult(F, float(stats.f.sf(F, lag, df2)), lags=lag, aux={"df1": float(lag), "df2": float(df2), "nobs": float(m)})


def newey_west_lag(n: int) -> int:
    """Automatic truncation ``floor(4 (n/100)^(2/9))``."""
    return int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def hac_covariance(X: np.ndarray, resid: np.ndarray, lag: int) -> np.ndarray:
    """Newey-West sandwich with Bartlett weights ``1 - j/(lag+1)``; no df correction."""
    scores = X * resid[:, None]
    S = scores.T @ scores
    for j in range(1, lag + 1):
        g = scores[j:].T @ scores[:-j]
        S += (1.0 - j / (lag + 1.0)) * (g + g.T)
    bread = np.linalg.inv(X.T @ X)
    return bread @ S @ bread


def ols_hac(
    y,
    X: Mapping[str, Sequence[float]] | np.ndarray,
    nw_lag: int | str = "auto",
    names: Sequence[str] | None = None,
    add_const: bool = True,
) -> RegressionFit:
    """OLS with Newey-West HAC standard errors and normal p-values.

    ``X`` is either a mapping of column names to values or a 2-d array (with
    optional ``names``).  The intercept is prepended as ``"const"``.
    """
    yv = _as_1d(y, "y")
    if isinstance(X, Mapping):
        names = list(X)
        cols = [_as_1d(X[k], k) for k in names]
    else:
        arr = np.asarray(X, dtype=float)
        arr = arr[:, None] if arr.ndim == 1 else arr
        if not np.all(np.isfinite(arr)):
            raise ValueError("X contains non-finite values")
        names = list(names) if names is not None else [f"x{i + 1}" for i in range(arr.shape[1])]
        cols = list(arr.T)
    if add_const:
        names, cols = ["const", *names], [np.ones(yv.size), *cols]
    design = np.column_stack(cols)
    n, k = design.shape
    if design.shape[0] != yv.size:
        raise ValueError("y and X have different lengths")
    if n <= k:
        raise InsufficientDataError(f"need more observations ({n}) than coefficients ({k})")
    beta, resid = _ols_rss(yv, design)
    lag = newey_west_lag(n) if nw_lag == "auto" else int(nw_lag)
    if lag < 0:
        raise ValueError("nw_lag must be >= 0")
    cov = hac_covariance(design, resid, lag)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / np.where(se > 0, se, 1.0), np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    p = 2 * stats.norm.sf(np.abs(t))
    rss = float(resid @ resid)
    tss = float(np.sum((yv - yv.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - k) if add_const else r2
    return RegressionFit(
        names=tuple(names),
        coefficients=dict(zip(names, map(float, beta))),
        hac_se=dict(zip(names, map(float, se))),
        tstats=dict(zip(names, map(float, t))),
        pvalues=dict(zip(names, map(float, p))),
        r2=r2,
        r2_adj=r2_adj,
        nobs=n,
        nw_lag=lag,
        resid=resid,
    )
