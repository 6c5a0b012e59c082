"""Multifractal detrended fluctuation analysis.

The chain is::

    returns -> profile -> 2*N_s detrended boxes per scale -> F_q(s)
            -> h(q) (log-log slope) -> tau(q) = q h(q) - D -> (alpha, f)

Boxes tile the profile from both ends so no data are discarded when ``s``
does not divide the length.  The covering runs over the profile anchored at
its origin ``y(0) = 0``; with that convention reversing the return series maps
the start tiling exactly onto the end tiling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import IO, Sequence

import numpy as np
from scipy.special import logsumexp

from .exceptions import DegenerateWindowError, InsufficientDataError

# box values at or below this fraction of the box's profile magnitude are zero
ZERO_BOX_RTOL = 1e-10


def profile(returns: Sequence[float] | np.ndarray) -> np.ndarray:
    """Running sum ``y(i) = r_1 + ... + r_i`` (no mean removal)."""
    r = np.asarray(returns, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise InsufficientDataError("profile of an empty series")
    if not np.all(np.isfinite(r)):
        raise ValueError("returns must be finite")
    return np.cumsum(r)


def anchored_profile(returns) -> np.ndarray:
    """Profile with the origin ``y(0) = 0`` prepended (length ``N + 1``)."""
    return np.concatenate(([0.0], profile(returns)))


def q_grid(q_min: float = -4.0, q_max: float = 8.0, step: float = 0.25) -> np.ndarray:
    """Uniform moment grid; values within ``1e-9*step`` of 0 are snapped to 0."""
    if step <= 0 or q_max <= q_min:
        raise ValueError("need q_max > q_min and step > 0")
    n = int(round((q_max - q_min) / step)) + 1
    qs = q_min + step * np.arange(n)
    if abs(qs[-1] - q_max) > 1e-9 * step:
        raise ValueError("(q_max - q_min) must be a multiple of step")
    qs[np.abs(qs) < 1e-9 * step] = 0.0
    return qs


def grid_step(qs: np.ndarray) -> float:
    """Spacing of a uniform grid; raises on non-uniform or too short grids."""
    qs = np.asarray(qs, dtype=float)
    if qs.size < 3:
        raise ValueError("need at least 3 q values")
    d = np.diff(qs)
    if d[0] <= 0 or not np.allclose(d, d[0], rtol=1e-9, atol=0):
        raise ValueError("q grid must be strictly increasing with uniform spacing")
    return float(d[0])


def scale_grid(
    n: int,
    s_min: int = 20,
    s_max: int | None = None,
    n_scales: int = 20,
    order: int = 1,
    spacing: str = "log",
) -> np.ndarray:
    """Integer box sizes for a series of ``n`` returns.

    ``spacing="log"`` places ``n_scales`` points geometrically between
    ``s_min`` and ``s_max`` (default ``n // 4``) and deduplicates after
    rounding.  ``spacing="dyadic"`` takes the powers of two inside the range,
    which suits series with binary hierarchical structure.
    """
    s_max = n // 4 if s_max is None else min(int(s_max), n // 4)
    s_min = max(int(s_min), order + 2)
    if s_max < s_min:
        raise InsufficientDataError(f"series of length {n} admits no scale >= {s_min}")
    if spacing == "log":
        scales = np.unique(np.round(np.geomspace(s_min, s_max, n_scales)).astype(int))
    elif spacing == "dyadic":
        lo, hi = int(np.ceil(np.log2(s_min))), int(np.floor(np.log2(s_max)))
        scales = 2 ** np.arange(lo, hi + 1)
    else:
        raise ValueError(f"unknown scale spacing {spacing!r}")
    if scales.size < 3:
        raise InsufficientDataError(f"only {scales.size} scales fit a series of length {n}")
    return scales


@lru_cache(maxsize=512)
def _detrend_basis(s: int, order: int) -> np.ndarray:
    # Orthonormal basis of polynomials in the within-box index 1..s, centred
    # and scaled for conditioning (residuals are unchanged by affine abscissa maps).
    x = (np.arange(1, s + 1) - (s + 1) / 2) / s
    q, _ = np.linalg.qr(np.vander(x, order + 1))
    q.setflags(write=False)
    return q


def box_fluctuations(y: np.ndarray, s: int, order: int = 1) -> np.ndarray:
    """Root-mean-square detrending residual of each of the ``2*N_s`` boxes.

    Boxes ``0..N_s-1`` tile ``y`` from the start, boxes ``N_s..2N_s-1`` tile it
    from the end.  Each box is fitted by an order-``order`` least-squares
    polynomial and its value is ``sqrt(mean(residual**2))`` over its ``s``
    points.  Values that are zero up to rounding are returned as exactly 0.
    """
    y = np.asarray(y, dtype=float)
    s = int(s)
    if s < order + 2:
        raise ValueError(f"scale {s} too small for polynomial order {order}")
    n = y.size
    if s > n:
        raise ValueError(f"scale {s} exceeds series length {n}")
    ns = n // s
    boxes = np.vstack((y[: ns * s].reshape(ns, s), y[n - ns * s :].reshape(ns, s)))
    basis = _detrend_basis(s, order)
    resid = boxes - (boxes @ basis) @ basis.T
    fk = np.sqrt(np.mean(resid * resid, axis=1))
    fk[fk <= ZERO_BOX_RTOL * np.max(np.abs(boxes), axis=1)] = 0.0
    return fk


@dataclass(frozen=True, eq=False)
class FluctuationSurface:
    """``F[i, j] = F_{q_i}(s_j)`` with the box values that produced each column."""

    qs: np.ndarray
    scales: np.ndarray
    F: np.ndarray
    box_fluct: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def log_F(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.F)


def fluctuation_function(
    box_values: Sequence[np.ndarray], qs: np.ndarray, scales: Sequence[int]
) -> FluctuationSurface:
    """Generalized means of order ``q`` of the box values at each scale.

    ``q = 0`` uses the geometric mean.  Evaluation is in log space so large
    ``|q|`` neither overflows nor underflows.  Zero boxes are allowed only
    when every ``q`` is positive; otherwise :class:`DegenerateWindowError` is
    raised for the first offending scale.
    """
    qs = np.asarray(qs, dtype=float)
    scales = np.asarray(scales, dtype=int)
    if len(box_values) != scales.size:
        raise ValueError("one box-value array per scale is required")
    lnF = np.empty((qs.size, scales.size))
    nonpos = qs <= 0
    nz = qs != 0
    for j, (s, fk) in enumerate(zip(scales, box_values)):
        fk = np.asarray(fk, dtype=float)
        if not np.all(np.isfinite(fk)) or np.any(fk < 0):
            raise ValueError(f"box values at scale {s} must be finite and >= 0")
        zero = fk == 0
        if zero.any() and nonpos.any():
            raise DegenerateWindowError(int(s))
        with np.errstate(divide="ignore"):
            lf = np.log(fk)
        lnm = np.log(fk.size)
        lnF[~nz, j] = lf.mean()
        lnF[nz, j] = (logsumexp(qs[nz, None] * lf[None, :], axis=1) - lnm) / qs[nz]
    return FluctuationSurface(qs, scales, np.exp(lnF), tuple(np.asarray(b) for b in box_values))


@dataclass(frozen=True, eq=False)
class HurstFit:
    qs: np.ndarray
    h: np.ndarray
    intercept: np.ndarray
    stderr: np.ndarray
    r2: np.ndarray


def fit_hurst(surface: FluctuationSurface) -> HurstFit:
    """OLS slope of ``ln F_q(s)`` on ``ln s`` for every ``q``."""
    s = surface.scales
    if s.size < 3:
        raise InsufficientDataError("fitting h(q) needs at least 3 scales")
    if np.any(surface.F <= 0):
        bad = int(s[np.nonzero(np.any(surface.F <= 0, axis=0))[0][0]])
        raise DegenerateWindowError(bad, f"zero fluctuation function at scale s={bad}")
    x = np.log(s.astype(float))
    Y = np.log(surface.F)  # (nq, ns)
    xc = x - x.mean()
    sxx = xc @ xc
    ym = Y.mean(axis=1)
    slope = (Y @ xc) / sxx
    intercept = ym - slope * x.mean()
    resid = Y - intercept[:, None] - slope[:, None] * x[None, :]
    rss = np.sum(resid**2, axis=1)
    tss = np.sum((Y - ym[:, None]) ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(tss > 0, 1.0 - rss / tss, 1.0)
    stderr = np.sqrt(rss / (s.size - 2) / sxx)
    return HurstFit(surface.qs, slope, intercept, stderr, r2)


def scaling_exponents(h: np.ndarray, qs: np.ndarray, d_support: float = 1.0) -> np.ndarray:
    """Mass exponents ``tau(q) = q h(q) - d_support``."""
    return np.asarray(qs, dtype=float) * np.asarray(h, dtype=float) - d_support


def legendre_transform(qs: np.ndarray, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``alpha = dtau/dq`` and ``f = q alpha - tau`` on a uniform grid.

    Central differences inside, second-order one-sided stencils at both ends.
    """
    dq = grid_step(qs)
    tau = np.asarray(tau, dtype=float)
    alpha = np.gradient(tau, dq, edge_order=2)
    return alpha, np.asarray(qs) * alpha - tau


@dataclass(frozen=True, eq=False)
class SingularitySpectrum:
    """Per-q record ``(q, h, tau, alpha, f)`` with log-log fit diagnostics."""

    q: np.ndarray
    h: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f: np.ndarray
    h_stderr: np.ndarray
    h_r2: np.ndarray
    surface: FluctuationSurface | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.q.size

    def reversed(self) -> "SingularitySpectrum":
        """Same points in descending-q order."""
        flip = slice(None, None, -1)
        return SingularitySpectrum(
            self.q[flip], self.h[flip], self.tau[flip], self.alpha[flip], self.f[flip],
            self.h_stderr[flip], self.h_r2[flip], self.surface,
        )


def legendre_spectrum(
    qs: np.ndarray,
    tau: np.ndarray,
    h: np.ndarray | None = None,
    h_stderr: np.ndarray | None = None,
    h_r2: np.ndarray | None = None,
    surface: FluctuationSurface | None = None,
) -> SingularitySpectrum:
    qs = np.asarray(qs, dtype=float)
    tau = np.asarray(tau, dtype=float)
    alpha, f = legendre_transform(qs, tau)
    if h is None:
        with np.errstate(invalid="ignore", divide="ignore"):
            h = np.where(qs != 0, (tau + 1.0) / np.where(qs != 0, qs, 1.0), np.nan)
    nan = np.full(qs.size, np.nan)
    return SingularitySpectrum(
        qs, np.asarray(h, float), tau, alpha, f,
        nan if h_stderr is None else h_stderr,
        nan if h_r2 is None else h_r2,
        surface,
    )


def fluctuation_surface(
    returns,
    qs: np.ndarray | None = None,
    scales: Sequence[int] | None = None,
    order: int = 1,
    s_min: int = 20,
    s_max_fraction: float = 0.25,
    n_scales: int = 20,
    spacing: str = "log",
) -> FluctuationSurface:
    y = anchored_profile(returns)
    n = y.size - 1
    qs = q_grid() if qs is None else np.asarray(qs, dtype=float)
    if scales is None:
        scales = scale_grid(n, s_min, int(np.floor(n * s_max_fraction)), n_scales, order, spacing)
    scales = np.asarray(scales, dtype=int)
    boxes = [box_fluctuations(y, s, order) for s in scales]
    return fluctuation_function(boxes, qs, scales)


def mfdfa(
    returns,
    qs: np.ndarray | None = None,
    scales: Sequence[int] | None = None,
    order: int = 1,
    s_min: int = 20,
    s_max_fraction: float = 0.25,
    n_scales: int = 20,
    spacing: str = "log",
    d_support: float = 1.0,
) -> SingularitySpectrum:
    """Full MF-DFA of a return series.

    Parameters
    ----------
    returns : array_like
        Return series (the profile is built internally).
    qs : array_like, optional
        Uniform moment grid; default ``q_grid()`` i.e. -4..8 step 0.25.
    scales : sequence of int, optional
        Box sizes; default ``scale_grid`` between ``s_min`` and
        ``floor(N * s_max_fraction)``.
    order : int
        Detrending polynomial order.

    Returns
    -------
    SingularitySpectrum
        With ``surface`` attached for inspection.

    Raises
    ------
    DegenerateWindowError
        If a box has zero fluctuation and the grid contains ``q <= 0``.
    """
    surface = fluctuation_surface(returns, qs, scales, order, s_min, s_max_fraction, n_scales, spacing)
    fit = fit_hurst(surface)
    tau = scaling_exponents(fit.h, surface.qs, d_support)
    return legendre_spectrum(surface.qs, tau, fit.h, fit.stderr, fit.r2, surface)


def dump_surface(surface: FluctuationSurface, stream: IO[str], fmt: str = "%.6g") -> None:
    """Write ``q,s,F,ln_s,ln_F`` rows (q-major) for inspection."""
    stream.write("q,s,F,ln_s,ln_F\n")
    lnF = surface.log_F
    for i, q in enumerate(surface.qs):
        for j, s in enumerate(surface.scales):
            vals = (q, s, surface.F[i, j], np.log(s), lnF[i, j])
            stream.write(",".join(fmt % v for v in vals) + "\n")
