"""Seeded synthetic series and the closed-form binomial cascade oracle.

All randomness comes from numpy's PCG64 bit generator.  Normal variates are
drawn by the Box-Muller transform of PCG64 doubles rather than numpy's
ziggurat so that fixtures can be regenerated from the uniform stream alone.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

PRNG = "PCG64"
PRNG_VERSION = 1  # bump whenever the mapping from (seed, spec) to output changes

KINDS = ("gaussian_iid", "random_walk", "ar1", "garch11", "binomial_cascade")

_DEFAULTS = {
    "gaussian_iid": {"sigma": 1.0, "mu": 0.0},
    "random_walk": {"sigma": 1.0},
    "ar1": {"phi": 0.5, "sigma": 1.0},
    "garch11": {"omega": 0.1, "a": 0.1, "b": 0.85},
    "binomial_cascade": {"p": 0.3},
}


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    length: int
    seed: int = 0
    params: Mapping[str, float] = field(default_factory=dict)

    def resolved_params(self) -> dict[str, float]:
        if self.kind not in _DEFAULTS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - set(_DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        return {**_DEFAULTS[self.kind], **{k: float(v) for k, v in self.params.items()}}


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def standard_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Box-Muller normals from ``ceil(n/2)`` uniform pairs."""
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1]
    u2 = rng.random(m)
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = rad * np.cos(2 * np.pi * u2)
    z[1::2] = rad * np.sin(2 * np.pi * u2)
    return z[:n]


def binomial_cascade(p: float, levels: int) -> np.ndarray:
    """Cell masses of a deterministic binomial measure after ``levels`` splits.

    Cell ``k`` receives weight ``p`` for each 1 in its binary index and
    ``1 - p`` for each 0, so the masses sum to 1.
    """
    if not 0 < p <= 0.5:
        raise ValueError("cascade weight p must lie in (0, 0.5]")
    if levels < 1:
        raise ValueError("cascade needs at least one level")
    ones = np.zeros(1, dtype=np.int64)
    for _ in range(levels):
        ones = np.concatenate((ones, ones + 1))
    return np.exp(ones * np.log(p) + (levels - ones) * np.log1p(-p))


def generate(spec: GeneratorSpec) -> np.ndarray:
    """Draw the series described by ``spec`` (bit-identical for equal specs)."""
    prm = spec.resolved_params()
    n = int(spec.length)
    if n <= 0:
        raise ValueError("length must be positive")
    kind = spec.kind
    if kind == "binomial_cascade":
        levels = n.bit_length() - 1
        if 1 << levels != n:
            raise ValueError("cascade length must be a power of 2")
        return binomial_cascade(prm["p"], levels)

    rng = rng_for(spec.seed)
    if prm.get("sigma", 1.0) <= 0:
        raise ValueError("sigma must be positive")
    if kind == "gaussian_iid":
        return prm["mu"] + prm["sigma"] * standard_normal(rng, n)
    if kind == "random_walk":
        return np.cumsum(prm["sigma"] * standard_normal(rng, n))
    if kind == "ar1":
        phi = prm["phi"]
        if not -1 < phi < 1:
            raise ValueError("AR(1) needs |phi| < 1")
        from scipy.signal import lfilter

        eps = prm["sigma"] * standard_normal(rng, n)
        # start from the stationary distribution
        eps[0] /= np.sqrt(1.0 - phi * phi)
        return lfilter([1.0], [1.0, -phi], eps)
    if kind == "garch11":
        omega, a, b = prm["omega"], prm["a"], prm["b"]
        if omega <= 0 or a < 0 or b < 0 or a + b >= 1:
            raise ValueError("GARCH(1,1) needs omega > 0, a, b >= 0 and a + b < 1")
        z = standard_normal(rng, n)
        return _garch_path(z, omega, a, b)
    raise AssertionError(kind)


def _garch_path(z: np.ndarray, omega: float, a: float, b: float) -> np.ndarray:
    x = np.empty_like(z)
    var = omega / (1.0 - a - b)
    for t in range(z.size):
        x[t] = np.sqrt(var) * z[t]
        var = omega + a * x[t] * x[t] + b * var
    return x


@dataclass(frozen=True, eq=False)
class CascadeOracle:
    q: np.ndarray
    h: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f: np.ndarray

    @property
    def delta_alpha(self) -> float:
        return float(self.alpha.max() - self.alpha.min())


def cascade_oracle(p: float, qs) -> CascadeOracle:
    """Analytic ``h, tau, alpha, f`` of the binomial cascade increments.

    ``tau(q) = -log2(p**q + (1-p)**q)``, ``h(q) = (tau(q) + 1) / q`` with the
    ``q -> 0`` limit ``-(ln p + ln(1-p)) / (2 ln 2)``, and the Legendre pair
    from the exact derivative of ``tau``.
    """
    if not 0 < p <= 0.5:
        raise ValueError("cascade weight p must lie in (0, 0.5]")
    q = np.asarray(qs, dtype=float)
    lp, lr = np.log(p), np.log1p(-p)
    wp, wr = np.exp(q * lp), np.exp(q * lr)
    w = wp + wr
    tau = -np.log(w) / np.log(2)
    safe_q = np.where(q == 0, 1.0, q)
    h = np.where(q == 0, -(lp + lr) / (2 * np.log(2)), 1.0 / safe_q - np.log(w) / (safe_q * np.log(2)))
    alpha = -(wp * lp + wr * lr) / (w * np.log(2))
    return CascadeOracle(q, h, tau, alpha, q * alpha - tau)


def trading_calendar(n_days: int, start: dt.date = dt.date(2004, 1, 5)) -> list[dt.date]:
    """``n_days`` consecutive weekdays starting at ``start``."""
    days, d = [], start
    while len(days) < n_days:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def session_stamps(minutes_per_day: int) -> list[str]:
    """Clock stamps of a two-session day (09:31-11:30, 13:01-15:00).

    Days longer than 240 minutes fall back to plain integer indices.
    """
    if minutes_per_day > 240:
        return [str(k) for k in range(1, minutes_per_day + 1)]
    morning = min(minutes_per_day, 120)
    stamps = [f"{9 + (30 + k) // 60:02d}:{(30 + k) % 60:02d}" for k in range(1, morning + 1)]
    stamps += [f"{13 + k // 60:02d}:{k % 60:02d}" for k in range(1, minutes_per_day - morning + 1)]
    return stamps


def price_rows(
    returns: np.ndarray,
    minutes_per_day: int,
    p0: float = 1000.0,
    start: dt.date = dt.date(2004, 1, 5),
    gaps: np.ndarray | None = None,
) -> Iterator[tuple[str, str, float]]:
    """Lay returns onto ``(date, time, price)`` rows of complete trading days.

    Each day holds ``minutes_per_day`` prices, i.e. ``minutes_per_day - 1``
    returns.  Without ``gaps`` a day opens at the previous close, so the
    within-day returns reproduce ``returns`` exactly.  ``gaps[k]`` adds an
    overnight log move before day ``k + 1``.
    """
    per_day = minutes_per_day - 1
    r = np.asarray(returns, dtype=float)
    if per_day < 1 or r.size % per_day:
        raise ValueError(f"return count {r.size} is not a multiple of minutes_per_day - 1 = {per_day}")
    n_days = r.size // per_day
    if gaps is not None and len(gaps) != n_days - 1:
        raise ValueError("need one overnight gap per day boundary")
    stamps = session_stamps(minutes_per_day)
    level = np.log(p0)
    for k, day in enumerate(trading_calendar(n_days, start)):
        if k and gaps is not None:
            level += gaps[k - 1]
        path = level + np.concatenate(([0.0], np.cumsum(r[k * per_day : (k + 1) * per_day])))
        iso = day.isoformat()
        for stamp, lp in zip(stamps, path):
            yield iso, stamp, float(np.exp(lp))
        level = path[-1]
