"""Matplotlib renderings of the report figures.

Every figure also exists as a CSV written by the CLI; these functions only
draw.  PNGs are saved without the software/date metadata so that reruns are
byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .mfdfa import SingularitySpectrum  # noqa: E402
from .predict import PREDICTOR_LABELS, BinSummary  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "lines.markersize": 3,
    "savefig.dpi": 120,
    "svg.hashsalt": "mfpredict",
}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def window_figure(
    prices: np.ndarray,
    returns: np.ndarray,
    spec: SingularitySpectrum,
    path: Path,
    title: str = "",
) -> Path:
    """Price path, return series and ``f(alpha)`` of one window, side by side."""
    with plt.rc_context(RC):
        fig, (ax_p, ax_r, ax_s) = plt.subplots(1, 3, figsize=(9.0, 2.8), constrained_layout=True)
        ax_p.plot(np.arange(prices.size), prices, color="k")
        ax_p.set_xlabel("minute")
        ax_p.set_ylabel("price")
        ax_r.plot(np.arange(returns.size), returns, color="tab:blue")
        ax_r.set_xlabel("minute")
        ax_r.set_ylabel(r"$r_m$")
        ax_s.plot(spec.alpha, spec.f, "o-", color="tab:red", mfc="none")
        ax_s.set_xlabel(r"$\alpha$")
        ax_s.set_ylabel(r"$f(\alpha)$")
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def fq_figure(spec: SingularitySpectrum, path: Path, q_show: Sequence[float] = (-4, -2, 0, 2, 4, 8)) -> Path:
    """``ln F_q(s)`` against ``ln s`` with the fitted lines for a few ``q``."""
    surface = spec.surface
    if surface is None:
        raise ValueError("spectrum carries no fluctuation surface")
    ls = np.log(surface.scales)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(3.6, 3.0), constrained_layout=True)
        for q in q_show:
            i = int(np.argmin(np.abs(surface.qs - q)))
            ax.plot(ls, surface.log_F[i], "o", mfc="none", label=f"q={surface.qs[i]:g}")
            ax.plot(ls, np.polyval(np.polyfit(ls, surface.log_F[i], 1), ls), "-", color="0.4")
        ax.set_xlabel(r"$\ln s$")
        ax.set_ylabel(r"$\ln F_q(s)$")
        ax.legend(frameon=False)
        return _save(fig, path)


def bins_figure(summaries: Sequence[BinSummary], path: Path, title: str = "") -> Path:
    """Mean next-day excess return per predictor bin, with bin fractions on a twin axis."""
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, len(summaries), figsize=(3.0 * len(summaries), 2.8), constrained_layout=True, squeeze=False)
        for ax, bs in zip(axes[0], summaries):
            keep = bs.count > 0
            ax.errorbar(bs.mean_predictor[keep], bs.mean_response[keep], yerr=bs.se_response[keep], fmt="o-", color="k", capsize=2)
            ax.set_xlabel(r"$\langle %s \rangle$" % PREDICTOR_LABELS.get(bs.predictor, bs.predictor))
            ax.set_ylabel(r"$\langle r^*_{d+1} \rangle$")
            twin = ax.twinx()
            twin.plot(bs.mean_predictor[keep], bs.fraction[keep], "s--", color="tab:blue", mfc="none")
            twin.set_ylabel("fraction", color="tab:blue")
        if title:
            fig.suptitle(title)
        return _save(fig, path)
