"""Predictor panel, binned responses and in/out-of-sample predictive tests.

Row ``d`` of the panel carries spectrum characteristics estimated on minute
returns of trading days ``d-w+1 .. d`` and the excess return of day ``d+1``
as target, so a row never sees data beyond its own day except through the
target.
"""

from __future__ import annotations

import datetime as dt
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from . import stattests
from .exceptions import (
    DegenerateInputError,
    DegenerateSpectrumError,
    DegenerateWindowError,
    InsufficientDataError,
)
from .ingest import TradingDay, WindowSlice, iter_window_slices
from .mfdfa import SingularitySpectrum, mfdfa
from .spectrum import SpectrumCharacteristics, characteristics

PREDICTORS = ("delta_alpha", "delta_f", "B", "da_df", "da_B", "df_B")
PREDICTOR_LABELS = {
    "delta_alpha": "Δα",
    "delta_f": "Δf",
    "B": "B",
    "da_df": "ΔαΔf",
    "da_B": "ΔαB",
    "df_B": "ΔfB",
}
DELTA_ALPHA_EDGES = (-math.inf, 0.05, 0.10, 0.15, 0.20, 0.25, math.inf)
MIN_INSAMPLE_ROWS = 30
DEFAULT_OOS_INITIAL = 600
SCHEMES = ("moving", "expanding")


def realized_vol(returns) -> float:
    """Sum of squared intraperiod returns."""
    r = np.asarray(returns, dtype=float)
    if r.size == 0:
        raise ValueError("realized volatility of an empty window")
    return float(r @ r)


@dataclass(frozen=True, eq=False)
class WindowAnalysis:
    window_id: int
    first_day: dt.date
    last_day: dt.date
    end_index: int  # position of last_day in the trading-day sequence
    n_returns: int
    cum_return: float
    realized_vol: float
    chars: SpectrumCharacteristics | None
    error: str | None = None
    spectrum: SingularitySpectrum | None = field(default=None, repr=False)

    @property
    def valid(self) -> bool:
        return self.chars is not None


def analyze_window(window: WindowSlice, w: int, keep_spectrum: bool = False, **mfdfa_kw) -> WindowAnalysis:
    """MF-DFA plus characteristics for one window; degeneracy marks it invalid."""
    r = window.returns.values
    common = dict(
        window_id=window.window_id,
        first_day=window.first_day,
        last_day=window.last_day,
        end_index=window.start + w - 1,
        n_returns=r.size,
        cum_return=window.cum_return,
        realized_vol=realized_vol(r),
    )
    try:
        spec = mfdfa(r, **mfdfa_kw)
        chars = characteristics(spec)
    except (DegenerateWindowError, DegenerateSpectrumError) as exc:
        return WindowAnalysis(chars=None, error=str(exc), **common)
    return WindowAnalysis(chars=chars, spectrum=spec if keep_spectrum else None, **common)


def analyze_windows(
    days: Sequence[TradingDay],
    w: int = 5,
    stride: int = 1,
    threads: int = 1,
    keep_spectra: Callable[[int], bool] | None = None,
    **mfdfa_kw,
) -> list[WindowAnalysis]:
    """Analyze every window; results come back in window order regardless of ``threads``."""
    keep = keep_spectra or (lambda _id: False)

    def job(win: WindowSlice) -> WindowAnalysis:
        return analyze_window(win, w, keep(win.window_id), **mfdfa_kw)

    windows = iter_window_slices(days, w, stride)
    if threads <= 1:
        return [job(win) for win in windows]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, windows))


@dataclass(frozen=True, eq=False)
class CharacteristicPanel:
    """Column-oriented panel, one row per window end day ``d`` with a successor day.

    Invalid rows (degenerate spectra) keep NaN characteristics and
    ``valid = False``; they are counted, never silently dropped.
    """

    day: np.ndarray  # window end day d (datetime64[D])
    window_start_day: np.ndarray
    target_day: np.ndarray  # d + 1
    cum_return: np.ndarray
    delta_alpha: np.ndarray
    delta_f: np.ndarray
    B: np.ndarray
    realized_vol: np.ndarray
    excess: np.ndarray  # r*_d, excess return of day d itself (NaN without a prior day)
    next_day_return: np.ndarray
    next_day_excess: np.ndarray
    valid: np.ndarray

    def __len__(self) -> int:
        return self.day.size

    @property
    def n_invalid(self) -> int:
        return int(np.sum(~self.valid))

    def predictor(self, name: str) -> np.ndarray:
        da, df, b = self.delta_alpha, self.delta_f, self.B
        table = {"delta_alpha": da, "delta_f": df, "B": b, "da_df": da * df, "da_B": da * b, "df_B": df * b}
        try:
            return table[name]
        except KeyError:
            raise ValueError(f"unknown predictor {name!r}; expected one of {PREDICTORS}") from None

    def subset(self, mask: np.ndarray) -> "CharacteristicPanel":
        return CharacteristicPanel(**{k: getattr(self, k)[mask] for k in self.__dataclass_fields__})


def _rf_lookup(rf, days: Sequence[dt.date]) -> np.ndarray:
    if rf is None:
        return np.zeros(len(days))
    if isinstance(rf, Mapping):
        missing = [d for d in days if d not in rf]
        if missing:
            raise InsufficientDataError(f"risk-free series has no value for {missing[0]} ({len(missing)} days missing)")
        return np.array([rf[d] for d in days], dtype=float)
    return np.full(len(days), float(rf))


def build_panel(
    days: Sequence[TradingDay],
    windows: Sequence[WindowAnalysis],
    rf: float | Mapping[dt.date, float] | None = None,
) -> CharacteristicPanel:
    """Align window characteristics to next-day excess returns.

    ``rf`` is a constant or a mapping from date to the daily risk-free
    return (default 0).  Windows ending on the last trading day yield no row.
    """
    n_days = len(days)
    rows = [win for win in windows if win.end_index + 1 < n_days]
    if not rows:
        raise InsufficientDataError("no window is followed by a trading day; panel is empty")
    for win in rows:
        if days[win.end_index].day != win.last_day:
            raise ValueError(f"window {win.window_id} is not aligned with the trading-day sequence")
    log_close = np.log([d.close_price for d in days])
    rates = _rf_lookup(rf, [d.day for d in days])
    end = np.array([win.end_index for win in rows])
    nxt = end + 1

    def chars_col(attr):
        return np.array([getattr(win.chars, attr) if win.valid else np.nan for win in rows])

    next_ret = log_close[nxt] - log_close[end]
    excess = np.full(end.size, np.nan)
    has_prev = end >= 1
    excess[has_prev] = log_close[end[has_prev]] - log_close[end[has_prev] - 1] - rates[end[has_prev]]
    as_dates = lambda idx: np.array([np.datetime64(days[i].day, "D") for i in idx])
    return CharacteristicPanel(
        day=as_dates(end),
        window_start_day=np.array([np.datetime64(win.first_day, "D") for win in rows]),
        target_day=as_dates(nxt),
        cum_return=np.array([win.cum_return for win in rows]),
        delta_alpha=chars_col("delta_alpha"),
        delta_f=chars_col("delta_f"),
        B=chars_col("B"),
        realized_vol=np.array([win.realized_vol for win in rows]),
        excess=excess,
        next_day_return=next_ret,
        next_day_excess=next_ret - rates[nxt],
        valid=np.array([win.valid for win in rows]),
    )


@dataclass(frozen=True, eq=False)
class BinSummary:
    predictor: str
    lower: np.ndarray
    upper: np.ndarray
    count: np.ndarray
    fraction: np.ndarray
    mean_predictor: np.ndarray
    mean_response: np.ndarray
    se_response: np.ndarray


def quantile_edges(x: np.ndarray, n_bins: int = 6) -> np.ndarray:
    edges = np.quantile(x, np.linspace(0, 1, n_bins + 1))
    edges[0], edges[-1] = -math.inf, math.inf
    return edges


def bin_response(
    panel: CharacteristicPanel,
    predictor: str,
    edges: Sequence[float] | None = None,
    n_bins: int = 6,
) -> BinSummary:
    """Mean next-day excess return within right-closed predictor bins ``(lo, hi]``.

    Default bins: the fixed 0.05-wide grid for ``delta_alpha``, ``n_bins``
    equal-count quantile bins otherwise.  Custom ``edges`` must cover every
    value or :class:`ValueError` is raised.
    """
    mask = panel.valid & np.isfinite(panel.next_day_excess)
    x = panel.predictor(predictor)[mask]
    y = panel.next_day_excess[mask]
    if x.size == 0:
        raise InsufficientDataError("no valid panel rows to bin")
    if edges is None:
        edges = DELTA_ALPHA_EDGES if predictor == "delta_alpha" else quantile_edges(x, n_bins)
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2 or np.any(np.diff(edges) < 0):
        raise ValueError("bin edges must be non-decreasing with at least two entries")
    if np.any(x <= edges[0]) and np.isfinite(edges[0]) or np.any(x > edges[-1]):
        raise ValueError("bin edges leave some values unassigned")
    idx = np.searchsorted(edges[1:-1], x, side="left")
    k = edges.size - 1
    count = np.bincount(idx, minlength=k)
    mean_x = np.full(k, np.nan)
    mean_y = np.full(k, np.nan)
    se_y = np.full(k, np.nan)
    for b in range(k):
        sel = idx == b
        if count[b]:
            mean_x[b] = x[sel].mean()
            mean_y[b] = y[sel].mean()
        if count[b] > 1:
            se_y[b] = y[sel].std(ddof=1) / math.sqrt(count[b])
    return BinSummary(predictor, edges[:-1].copy(), edges[1:].copy(), count, count / x.size, mean_x, mean_y, se_y)


@dataclass(frozen=True, eq=False)
class InSampleReport:
    fits: dict[str, stattests.RegressionFit]
    with_volatility: bool
    n_rows: int
    n_excluded: int


def _usable(panel: CharacteristicPanel) -> np.ndarray:
    return panel.valid & np.isfinite(panel.next_day_excess)


def in_sample(
    panel: CharacteristicPanel,
    predictors: Iterable[str] = PREDICTORS,
    with_volatility: bool = False,
    nw_lag: int | str = "auto",
) -> InSampleReport:
    """One univariate (or predictor + realized volatility) NW regression per predictor."""
    mask = _usable(panel)
    n = int(mask.sum())
    if n < MIN_INSAMPLE_ROWS:
        raise InsufficientDataError(f"in-sample regressions need >= {MIN_INSAMPLE_ROWS} valid rows, have {n}")
    y = panel.next_day_excess[mask]
    fits = {}
    for name in predictors:
        X = {"beta": panel.predictor(name)[mask]}
        if with_volatility:
            X["psi"] = panel.realized_vol[mask]
        try:
            fits[name] = stattests.ols_hac(y, X, nw_lag=nw_lag)
        except DegenerateInputError as exc:
            raise DegenerateInputError(f"predictor {name}: {exc}") from None
    return InSampleReport(fits, with_volatility, n, len(panel) - n)


def r2_os(actual, model, benchmark) -> float:
    """Out-of-sample R^2: ``1 - SSE(model) / SSE(benchmark)``."""
    a, m, b = (np.asarray(v, dtype=float) for v in (actual, model, benchmark))
    sse_b = float(np.sum((a - b) ** 2))
    if sse_b == 0:
        raise DegenerateInputError("benchmark forecasts are perfect; R2_OS undefined")
    return 1.0 - float(np.sum((a - m) ** 2)) / sse_b


def clark_west(actual, benchmark, model) -> tuple[float, float]:
    """Clark-West adjusted MSFE t-statistic with a one-sided normal p-value.

    Returns ``(nan, nan)`` when the model forecasts coincide with the
    benchmark (the adjusted loss differential is identically zero).
    """
    a, b, m = (np.asarray(v, dtype=float) for v in (actual, benchmark, model))
    if not (a.shape == b.shape == m.shape):
        raise ValueError("actuals and forecasts must have equal length")
    if a.size < 10:
        raise InsufficientDataError("Clark-West test needs at least 10 forecasts")
    f = (a - b) ** 2 - (a - m) ** 2 + (b - m) ** 2
    if np.all(np.abs(b - m) <= 1e-15 * (np.abs(b) + 1e-300)):
        return math.nan, math.nan
    sd = float(f.std(ddof=1))
    mean = float(f.mean())
    if sd == 0:
        stat = math.copysign(math.inf, mean) if mean else math.nan
    else:
        stat = mean / (sd / math.sqrt(f.size))
    return stat, (float(stats.norm.sf(stat)) if not math.isnan(stat) else math.nan)


def oos_forecasts(x, y, scheme: str = "moving", initial: int = DEFAULT_OOS_INITIAL):
    """Recursive one-step forecasts from ``y = a + b x`` and the historical mean.

    Row ``j >= initial`` is forecast from rows ``j-initial .. j-1`` (moving)
    or ``0 .. j-1`` (expanding).  The benchmark is the mean of ``y`` over the
    same rows.  Returns ``(actual, model, benchmark)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    T = x.size
    if initial < 2:
        raise ValueError("initial window must hold at least 2 rows")
    if T <= initial:
        raise InsufficientDataError(f"panel of {T} rows leaves no forecast after an initial window of {initial}")
    # shift by the first row's values for conditioning; OLS is shift-equivariant
    xs, ys = x - x[0], y - y[0]
    zero = np.zeros(1)
    cx, cy = np.concatenate((zero, np.cumsum(xs))), np.concatenate((zero, np.cumsum(ys)))
    cxx, cxy = np.concatenate((zero, np.cumsum(xs * xs))), np.concatenate((zero, np.cumsum(xs * ys)))
    j = np.arange(initial, T)
    lo = j - initial if scheme == "moving" else np.zeros_like(j)
    n = (j - lo).astype(float)
    sx, sy = cx[j] - cx[lo], cy[j] - cy[lo]
    sxx, sxy = cxx[j] - cxx[lo], cxy[j] - cxy[lo]
    den = n * sxx - sx * sx
    flat = den <= 1e-12 * n * np.maximum(sxx, 1e-300)
    slope = np.where(flat, 0.0, (n * sxy - sx * sy) / np.where(flat, 1.0, den))
    mean_y = sy / n
    model = y[0] + mean_y + slope * (xs[j] - sx / n)
    bench = y[0] + mean_y
    return y[j], model, bench


@dataclass(frozen=True)
class OosResult:
    predictor: str
    scheme: str
    r2_os: float
    cw_stat: float
    cw_pvalue: float
    n_forecasts: int
    n_excluded: int = 0

    @property
    def cw_defined(self) -> bool:
        return not math.isnan(self.cw_stat)


def oos_run(
    panel: CharacteristicPanel,
    predictor: str,
    scheme: str = "moving",
    initial: int = DEFAULT_OOS_INITIAL,
) -> OosResult:
    """Out-of-sample R^2 and Clark-West test for one predictor and scheme.

    Invalid rows are removed first, so windows count usable rows.  With fewer
    than 10 forecasts the Clark-West statistic is reported as NaN.
    """
    mask = _usable(panel)
    x = panel.predictor(predictor)[mask]
    y = panel.next_day_excess[mask]
    actual, model, bench = oos_forecasts(x, y, scheme, initial)
    try:
        r2 = r2_os(actual, model, bench)
    except DegenerateInputError:
        r2 = math.nan
    try:
        cw, p = clark_west(actual, bench, model)
    except InsufficientDataError:
        cw, p = math.nan, math.nan
    return OosResult(predictor, scheme, r2, cw, p, int(actual.size), len(panel) - int(mask.sum()))


def granger_table(panel: CharacteristicPanel, lag: int = 1) -> list[tuple[str, str, stattests.TestResult]]:
    """Both directions between same-day excess return and each characteristic.

    Returns ``(cause, effect, result)`` triples in the order
    ``r*->Δα, Δα->r*, r*->Δf, Δf->r*, r*->B, B->r*``.  Invalid rows enter as
    NaN and drop out of every regression whose lags touch them.
    """
    out = []
    r_star = panel.excess
    for name in ("delta_alpha", "delta_f", "B"):
        c = panel.predictor(name)
        out.append(("r_star", name, stattests.granger(r_star, c, lag)))
        out.append((name, "r_star", stattests.granger(c, r_star, lag)))
    return out


def stars(p: float) -> str:
    if p is None or math.isnan(p):
        return ""
    return "***" if p < 0.001 else "**" if p < 0.01 else "*" if p < 0.05 else ""
