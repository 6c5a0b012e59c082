"""Independent oracles and fixture builders shared by the test modules.

The oracles below are deliberately naive (explicit loops, ``np.polyfit``,
direct power sums) so that they share no code path with the package.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from mfpredict import mfdfa as mf
from mfpredict import predict as P
from mfpredict import spectrum as sp
from mfpredict.synth import price_rows, rng_for, standard_normal


# -- MF-DFA brute force --------------------------------------------------------

def brute_box_values(y, s, order=1):
    """RMS residual of ``np.polyfit`` on every forward and backward box."""
    y = np.asarray(y, dtype=float)
    n = y.size
    ns = n // s
    x = np.arange(1, s + 1, dtype=float)
    out = []
    for starts in (range(0, ns * s, s), range(n - ns * s, n, s)):
        for a in starts:
            seg = y[a : a + s]
            coef = np.polyfit(x, seg, order)
            res = seg - np.polyval(coef, x)
            out.append(math.sqrt(float(np.mean(res**2))))
    return np.array(out)


def brute_power_mean(values, q):
    v = np.asarray(values, dtype=float)
    if q == 0:
        return math.exp(float(np.mean(np.log(v))))
    return float(np.mean(v**q)) ** (1.0 / q)


def brute_hurst(returns, qs, scales, order=1):
    """h(q) by the textbook recipe on the origin-anchored profile."""
    y = np.concatenate(([0.0], np.cumsum(returns)))
    lnF = np.array([[math.log(brute_power_mean(brute_box_values(y, s, order), q)) for s in scales] for q in qs])
    ls = np.log(np.asarray(scales, dtype=float))
    return np.array([np.polyfit(ls, row, 1)[0] for row in lnF]), np.exp(lnF)


# -- regression brute force ----------------------------------------------------

def rss(y, X):
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    return float(r @ r)


def brute_granger(x, y, lag):
    n = len(y)
    rows = range(lag, n)
    const = np.ones(n - lag)
    own = np.column_stack([[y[t - k] for t in rows] for k in range(1, lag + 1)])
    other = np.column_stack([[x[t - k] for t in rows] for k in range(1, lag + 1)])
    target = np.array([y[t] for t in rows])
    r0 = rss(target, np.column_stack((const, own)))
    r1 = rss(target, np.column_stack((const, own, other)))
    df2 = (n - lag) - 2 * lag - 1
    return ((r0 - r1) / lag) / (r1 / df2), df2


def brute_oos(x, y, scheme, initial):
    """Loop over forecast origins with ``np.polyfit`` refits."""
    actual, model, bench = [], [], []
    for j in range(initial, len(y)):
        lo = j - initial if scheme == "moving" else 0
        xs, ys = x[lo:j], y[lo:j]
        b, a = np.polyfit(xs, ys, 1)
        actual.append(y[j])
        model.append(a + b * x[j])
        bench.append(ys.mean())
    return np.array(actual), np.array(model), np.array(bench)


# -- synthetic markets ---------------------------------------------------------

def write_prices(path: Path, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("date", "time", "price"))
        for d, t, p in rows:
            w.writerow((d, t, "%.17g" % p))
    return path


def noise_market(path: Path, n_days: int, seed: int = 0, minutes: int = 240, sigma: float = 1e-3) -> Path:
    """Heteroskedastic-free Gaussian minute returns laid onto prices."""
    r = sigma * standard_normal(rng_for(seed), n_days * (minutes - 1))
    return write_prices(path, price_rows(r, minutes))


def planted_market(path: Path, n_days: int = 3024, seed: int = 0, slope: float = 2.0, r2: float = 0.01):
    """Minute prices where the next-day excess return loads on the window width.

    Within-day returns have a random level of volatility per day, which gives
    the 5-day windows a varying spectral width.  The width of the window
    ending on day ``d`` enters the overnight move into day ``d + 1`` with the
    given ``slope``, plus Gaussian noise sized so that the population
    regression R^2 is ``r2``.  The overnight move is recentred by the
    constant ``rf`` returned alongside the path, so that prices stay bounded
    and ``excess = return - rf`` carries the planted intercept-free relation.
    """
    m, per, w = 240, 239, 5
    rng = rng_for(seed)
    vol = 1e-4 * np.exp(0.5 * standard_normal(rng, n_days))
    intra = standard_normal(rng, n_days * per) * np.repeat(vol, per)
    width = np.array([
        sp.characteristics(mf.mfdfa(intra[k * per : (k + w) * per])).delta_alpha for k in range(n_days - w + 1)
    ])
    # width[k] belongs to the window ending on day k + w - 1
    signal = np.zeros(n_days - 1)
    signal[w - 1 :] = slope * width[:-1]
    noise_sd = slope * width.std() * math.sqrt((1 - r2) / r2)
    shift = slope * width.mean()
    gaps = signal - shift + noise_sd * standard_normal(rng_for(seed + 1), n_days - 1)
    write_prices(path, price_rows(intra, m, gaps=gaps))
    return path, -shift


def cascade_market(path: Path, levels: int = 14, p: float = 0.3) -> Path:
    """A single 4-day window whose minute returns are the cascade cells."""
    from mfpredict.synth import binomial_cascade

    cells = binomial_cascade(p, levels)
    days = 4
    minutes = cells.size // days + 1
    return write_prices(path, price_rows(cells, minutes)), minutes, days


# -- panels ---------------------------------------------------------------------

def _normals(seed, n):
    return standard_normal(rng_for(seed), n)


def make_panel(delta_alpha, target, delta_f=None, B=None, vol=None, valid=None):
    n = len(target)
    days = np.datetime64("2004-01-05") + np.arange(n)
    delta_f = _normals(1, n) if delta_f is None else np.asarray(delta_f, float)
    B = _normals(2, n) if B is None else np.asarray(B, float)
    return P.CharacteristicPanel(
        day=days,
        window_start_day=days - 4,
        target_day=days + 1,
        cum_return=np.zeros(n),
        delta_alpha=np.asarray(delta_alpha, float),
        delta_f=delta_f,
        B=B,
        realized_vol=np.abs(_normals(3, n)) if vol is None else np.asarray(vol, float),
        excess=np.concatenate(([np.nan], np.asarray(target, float)[:-1])),
        next_day_return=np.asarray(target, float),
        next_day_excess=np.asarray(target, float),
        valid=np.ones(n, bool) if valid is None else np.asarray(valid, bool),
    )
