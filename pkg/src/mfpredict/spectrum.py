"""Summary parameters of a singularity spectrum: width, end-point asymmetry, hook."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateSpectrumError
from .mfdfa import SingularitySpectrum

DEFAULT_SHAPE_TOL = 0.01


@dataclass(frozen=True)
class SpectrumCharacteristics:
    """Spectrum width ``delta_alpha``, end-point difference ``delta_f`` and the
    quadratic fit ``f = A (a - alpha0)**2 + B (a - alpha0) + C``."""

    delta_alpha: float
    delta_f: float
    B: float
    A: float
    alpha0: float
    C: float
    fit_r2: float
    alpha_min: float
    alpha_max: float


class Shape(str, enum.Enum):
    LEFT_HOOKED = "left_hooked"
    RIGHT_HOOKED = "right_hooked"
    SYMMETRIC = "symmetric"


def _alpha_at_zero(q: np.ndarray, alpha: np.ndarray) -> float:
    hit = np.nonzero(q == 0)[0]
    if hit.size:
        return float(alpha[hit[0]])
    order = np.argsort(q)
    if not q[order[0]] < 0 < q[order[-1]]:
        raise ValueError("q grid does not bracket 0; alpha0 is undefined")
    return float(np.interp(0.0, q[order], alpha[order]))


def characteristics(spec: SingularitySpectrum) -> SpectrumCharacteristics:
    """Reduce a spectrum to ``(delta_alpha, delta_f, B)`` plus fit diagnostics.

    ``delta_f = f(alpha_min) - f(alpha_max)``.  The parabola is centred at
    ``alpha0 = alpha(q=0)``, the apex of the spectrum, and fitted unweighted
    to every point.  The result does not depend on the order of the points.
    """
    q = np.asarray(spec.q, dtype=float)
    alpha = np.asarray(spec.alpha, dtype=float)
    f = np.asarray(spec.f, dtype=float)
    if q.size < 5:
        raise ValueError("characteristics need at least 5 spectrum points")
    if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(f))):
        raise ValueError("spectrum contains non-finite alpha or f")
    i_min, i_max = int(np.argmin(alpha)), int(np.argmax(alpha))
    a_min, a_max = float(alpha[i_min]), float(alpha[i_max])
    if a_max - a_min <= 1e-12:
        raise DegenerateSpectrumError("all alpha values coincide; spectrum has zero width")

    alpha0 = _alpha_at_zero(q, alpha)
    x = alpha - alpha0
    design = np.column_stack((x * x, x, np.ones_like(x)))
    (A, B, C), *_ = np.linalg.lstsq(design, f, rcond=None)
    resid = f - design @ np.array([A, B, C])
    tss = float(np.sum((f - f.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / tss if tss > 0 else 1.0
    return SpectrumCharacteristics(
        delta_alpha=a_max - a_min,
        delta_f=float(f[i_min] - f[i_max]),
        B=float(B),
        A=float(A),
        alpha0=alpha0,
        C=float(C),
        fit_r2=min(max(r2, 0.0), 1.0),
        alpha_min=a_min,
        alpha_max=a_max,
    )


def classify_shape(chars: SpectrumCharacteristics, tol: float = DEFAULT_SHAPE_TOL) -> Shape:
    if chars.B > tol:
        return Shape.LEFT_HOOKED
    if chars.B < -tol:
        return Shape.RIGHT_HOOKED
    return Shape.SYMMETRIC
