"""Command line entry point: ``mfpredict {analyze,stats,regress,oos,synth}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
degeneracy that left a required result empty.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import predict, stattests, synth
from .config import PipelineConfig, apply_overrides, load_config
from .exceptions import (
    ConfigError,
    DegenerateInputError,
    DegenerateSpectrumError,
    DegenerateWindowError,
    IngestError,
    InsufficientDataError,
)
from .ingest import RejectedDay, Schema, TradingDay, clean_days, load_minute_prices, load_rates
from .spectrum import classify_shape

log = logging.getLogger("mfpredict")

EXIT_CONFIG, EXIT_DATA, EXIT_DEGENERATE = 2, 3, 4
CONFIG_ECHO = "config.txt"
STAT_VARIABLES = ("sum_rm", "delta_alpha", "delta_f", "B")


class EmptyResultError(Exception):
    """Degeneracy removed every row of a required result."""


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return "%.6g" % v
    if isinstance(value, (dt.date, np.datetime64)):
        return str(value)
    return str(value)


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
            n += 1
    return n


@dataclass
class IndexData:
    name: str
    rows_read: int
    rows_rejected: int
    days: list[TradingDay]
    rejected: list[RejectedDay]
    windows: list[predict.WindowAnalysis]
    panel: predict.CharacteristicPanel | None


def _index_names(paths: Sequence[str]) -> list[str]:
    names = [Path(p).stem for p in paths]
    if len(set(names)) != len(names):
        names = [f"{n}_{k + 1}" for k, n in enumerate(names)]
    return names


def _risk_free(cfg: PipelineConfig):
    try:
        return float(cfg.rf)
    except ValueError:
        pass
    try:
        with open(cfg.rf, newline="") as fh:
            return load_rates(fh, cfg.delimiter)
    except OSError as exc:
        raise ConfigError(f"cannot read risk-free table {cfg.rf}: {exc}") from None


def prepare(cfg: PipelineConfig, keep_spectra: bool = False) -> list[IndexData]:
    """Ingest, clean and analyze every configured input."""
    if not cfg.input:
        raise ConfigError("no input file configured (set input = PATH or pass --input)")
    schema = Schema(cfg.date_col, cfg.time_col, cfg.price_col, cfg.delimiter, cfg.header)
    rf = _risk_free(cfg)
    wanted = set(cfg.spectra_windows)
    out = []
    for name, path in zip(_index_names(cfg.input), cfg.input):
        try:
            with open(path, newline="") as fh:
                loaded = load_minute_prices(fh, schema)
        except OSError as exc:
            raise IngestError(f"cannot read {path}: {exc}") from None
        days, rejected = clean_days(loaded.records, cfg.minutes_per_day)
        log.info("%s: %d rows, %d rejected rows, %d days kept, %d days rejected",
                 name, loaded.rows_read, loaded.rows_rejected, len(days), len(rejected))
        if not days:
            raise InsufficientDataError(f"{name}: no complete trading day survived cleaning")
        if len(days) < cfg.window_days:
            raise InsufficientDataError(f"{name}: {len(days)} clean days, fewer than window_days = {cfg.window_days}")
        windows = predict.analyze_windows(
            days, cfg.window_days, cfg.stride, cfg.threads,
            keep_spectra=(lambda wid: wid in wanted) if keep_spectra else None,
            **cfg.mfdfa_kwargs(),
        )
        try:
            panel = predict.build_panel(days, windows, rf)
        except InsufficientDataError as exc:
            if isinstance(rf, dict) and "risk-free" in str(exc):
                raise
            panel = None
        out.append(IndexData(name, loaded.rows_read, loaded.rows_rejected, days, rejected, windows, panel))
    return out


def _panels(data: list[IndexData]) -> list[tuple[str, predict.CharacteristicPanel]]:
    res = []
    for d in data:
        if d.panel is None:
            raise InsufficientDataError(f"{d.name}: no window is followed by a trading day")
        res.append((d.name, d.panel))
    return res


def _echo_config(cfg: PipelineConfig, out: Path) -> None:
    with open(out / CONFIG_ECHO, "w") as fh:
        cfg.dump(fh)


# -- analyze -----------------------------------------------------------------

WINDOW_HEADER = ("index", "window_id", "end_day", "cum_return", "delta_alpha", "delta_f", "B",
                 "alpha0", "A", "C", "fit_r2", "valid_flag", "shape")


def cmd_analyze(cfg: PipelineConfig, out: Path) -> int:
    data = prepare(cfg, keep_spectra=bool(cfg.spectra_windows))

    def window_rows():
        for d in data:
            for win in d.windows:
                c = win.chars
                if c is None:
                    yield (d.name, win.window_id, win.last_day, win.cum_return, *[math.nan] * 7, False, "")
                else:
                    yield (d.name, win.window_id, win.last_day, win.cum_return, c.delta_alpha, c.delta_f,
                           c.B, c.alpha0, c.A, c.C, c.fit_r2, True, classify_shape(c, cfg.shape_tol).value)

    write_table(out / "windows.csv", WINDOW_HEADER, window_rows())
    write_table(out / "ingest.csv", ("index", "rows_read", "rows_rejected", "days_accepted", "days_rejected"),
                [(d.name, d.rows_read, d.rows_rejected, len(d.days), len(d.rejected)) for d in data])
    write_table(out / "rejected_days.csv", ("index", "day", "reason", "n_records"),
                [(d.name, r.day, r.reason, r.n_records) for d in data for r in d.rejected])
    if cfg.spectra_windows:
        _write_spectra(cfg, data, out)
    if not any(win.valid for d in data for win in d.windows):
        raise EmptyResultError("every window has a degenerate spectrum")
    return 0


def _write_spectra(cfg: PipelineConfig, data: list[IndexData], out: Path) -> None:
    spec_rows, fq_rows = [], []
    picked = [(d, win) for d in data for win in d.windows if win.spectrum is not None]
    for d, win in picked:
        s = win.spectrum
        for i in range(len(s)):
            spec_rows.append((d.name, win.window_id, s.q[i], s.h[i], s.tau[i], s.alpha[i], s.f[i], s.h_stderr[i], s.h_r2[i]))
        surf = s.surface
        for i, q in enumerate(surf.qs):
            for j, sc in enumerate(surf.scales):
                fq_rows.append((d.name, win.window_id, q, sc, surf.F[i, j], math.log(sc), surf.log_F[i, j]))
    write_table(out / "spectrum.csv", ("index", "window_id", "q", "h", "tau", "alpha", "f", "h_stderr", "h_r2"), spec_rows)
    write_table(out / "fq_surface.csv", ("index", "window_id", "q", "s", "F", "ln_s", "ln_F"), fq_rows)
    if cfg.figures:
        from . import plotting

        for d, win in picked:
            member = d.days[win.end_index - cfg.window_days + 1 : win.end_index + 1]
            prices = np.concatenate([day.prices for day in member])
            returns = np.concatenate([day.minute_returns for day in member])
            title = f"{d.name} window {win.window_id}: {win.first_day} to {win.last_day}"
            plotting.window_figure(prices, returns, win.spectrum, out / f"window_{d.name}_{win.window_id}.png", title)
            plotting.fq_figure(win.spectrum, out / f"fq_{d.name}_{win.window_id}.png")


# -- stats -------------------------------------------------------------------

def _safe(fn, *args):
    try:
        return fn(*args)
    except (DegenerateInputError, InsufficientDataError, ValueError) as exc:
        log.warning("%s skipped: %s", getattr(fn, "__name__", fn), exc)
        return None


def stats_rows(name: str, panel: predict.CharacteristicPanel, cfg: PipelineConfig) -> list[tuple]:
    """Rows of ``(index, panel, statistic, sum_rm, delta_alpha, delta_f, B)``."""
    ok = panel.valid
    cols = {
        "sum_rm": panel.cum_return[ok],
        "delta_alpha": panel.delta_alpha[ok],
        "delta_f": panel.delta_f[ok],
        "B": panel.B[ok],
    }
    r_next = panel.next_day_return[ok]
    rows = []

    def row(panel_id, stat, values: dict):
        rows.append((name, panel_id, stat, *[values.get(v) for v in STAT_VARIABLES]))

    summaries = {k: _safe(stattests.describe, v) for k, v in cols.items()}
    for attr in ("mean", "median", "max", "min", "stdev", "skew", "kurt", "n", "degenerate"):
        row("A", attr, {k: getattr(s, attr) if s else None for k, s in summaries.items()})

    pairs = [("r_d", r_next, ("delta_alpha", "delta_f", "B")),
             ("sum_rm", cols["sum_rm"], ("delta_alpha", "delta_f", "B")),
             ("delta_alpha", cols["delta_alpha"], ("delta_f", "B")),
             ("delta_f", cols["delta_f"], ("B",))]
    for first, x, others in pairs:
        res = {o: _safe(stattests.pearson_with_p, x, cols[o]) for o in others}
        row("B", f"corr_{first}", {o: r.statistic if r else math.nan for o, r in res.items()})
        row("B", f"corr_{first}_p", {o: r.pvalue if r else math.nan for o, r in res.items()})

    for lag in (1, 5):
        res = {k: _safe(stattests.acf_test, v, lag) for k, v in cols.items()}
        row("C", f"rho{lag}", {k: r.statistic if r else math.nan for k, r in res.items()})
        row("C", f"rho{lag}_p", {k: r.pvalue if r else math.nan for k, r in res.items()})
    for lag in cfg.lb_lags:
        res = {k: _safe(stattests.ljung_box, v, lag) for k, v in cols.items()}
        row("C", f"Q{lag}", {k: r.statistic if r else math.nan for k, r in res.items()})
        row("C", f"Q{lag}_p", {k: r.pvalue if r else math.nan for k, r in res.items()})

    res = {k: _safe(stattests.adf_test, v, cfg.adf_max_lag) for k, v in cols.items()}
    row("D", "adf_lag", {k: r.lags if r else None for k, r in res.items()})
    row("D", "adf_stat", {k: r.statistic if r else math.nan for k, r in res.items()})
    row("D", "adf_p", {k: r.pvalue if r else math.nan for k, r in res.items()})

    for lag in cfg.arch_lags:
        res = {k: _safe(stattests.arch_lm, v, lag) for k, v in cols.items()}
        row("E", f"arch{lag}", {k: r.statistic if r else math.nan for k, r in res.items()})
        row("E", f"arch{lag}_p", {k: r.pvalue if r else math.nan for k, r in res.items()})
    return rows


def cmd_stats(cfg: PipelineConfig, out: Path) -> int:
    rows = []
    for name, panel in _panels(prepare(cfg)):
        if not panel.valid.any():
            raise EmptyResultError(f"{name}: no valid window for the statistics report")
        rows.extend(stats_rows(name, panel, cfg))
    write_table(out / "stats.csv", ("index", "panel", "statistic", *STAT_VARIABLES), rows)
    return 0


# -- regress -----------------------------------------------------------------

INSAMPLE_HEADER = ("index", "predictor", "beta", "beta_p", "beta_stars", "alpha", "alpha_p", "alpha_stars",
                   "r2_adj", "nobs", "nw_lag", "n_excluded")
INSAMPLE_VOL_HEADER = INSAMPLE_HEADER[:5] + ("psi", "psi_p", "psi_stars") + INSAMPLE_HEADER[5:]
GRANGER_HEADER = ("index", "hypothesis", "cause", "effect", "F", "pvalue", "stars", "lag", "nobs")
BINS_HEADER = ("index", "predictor", "bin", "lower", "upper", "count", "fraction", "mean_predictor",
               "mean_excess", "se_excess")


def _nw(cfg):
    return "auto" if cfg.nw_lag is None else cfg.nw_lag


def insample_rows(name: str, report: predict.InSampleReport) -> list[tuple]:
    rows = []
    for pred, fit in report.fits.items():
        c, p = fit.coefficients, fit.pvalues
        head = (name, pred, c["beta"], p["beta"], predict.stars(p["beta"]))
        vol = (c["psi"], p["psi"], predict.stars(p["psi"])) if report.with_volatility else ()
        tail = (c["const"], p["const"], predict.stars(p["const"]), fit.r2_adj, fit.nobs, fit.nw_lag, report.n_excluded)
        rows.append(head + vol + tail)
    return rows


def cmd_regress(cfg: PipelineConfig, out: Path) -> int:
    granger_rows, ins_rows, vol_rows, bin_rows = [], [], [], []
    bins_by_index = {}
    for name, panel in _panels(prepare(cfg)):
        for cause, effect, res in predict.granger_table(panel, cfg.granger_lag):
            granger_rows.append((name, f"{cause}->{effect}", cause, effect, res.statistic, res.pvalue,
                                 predict.stars(res.pvalue), res.lags, int(res.aux["nobs"])))
        ins_rows += insample_rows(name, predict.in_sample(panel, nw_lag=_nw(cfg)))
        vol_rows += insample_rows(name, predict.in_sample(panel, with_volatility=True, nw_lag=_nw(cfg)))
        summaries = [predict.bin_response(panel, p) for p in ("delta_alpha", "delta_f", "B")]
        bins_by_index[name] = summaries
        for bs in summaries:
            for b in range(bs.count.size):
                bin_rows.append((name, bs.predictor, b + 1, bs.lower[b], bs.upper[b], bs.count[b], bs.fraction[b],
                                 bs.mean_predictor[b], bs.mean_response[b], bs.se_response[b]))
    write_table(out / "granger.csv", GRANGER_HEADER, granger_rows)
    write_table(out / "insample.csv", INSAMPLE_HEADER, ins_rows)
    write_table(out / "insample_vol.csv", INSAMPLE_VOL_HEADER, vol_rows)
    write_table(out / "bins.csv", BINS_HEADER, bin_rows)
    if cfg.figures:
        from . import plotting

        for name, summaries in bins_by_index.items():
            plotting.bins_figure(summaries, out / f"bins_{name}.png", title=name)
    return 0


# -- oos ---------------------------------------------------------------------

OOS_HEADER = ("index", "predictor", "scheme", "r2_os_pct", "cw_stat", "cw_pvalue", "cw_stars", "cw_defined",
              "n_forecasts", "n_excluded")


def cmd_oos(cfg: PipelineConfig, out: Path) -> int:
    rows = []
    for name, panel in _panels(prepare(cfg)):
        for pred in predict.PREDICTORS:
            for scheme in cfg.oos_schemes:
                res = predict.oos_run(panel, pred, scheme, cfg.oos_initial)
                rows.append((name, pred, scheme, 100.0 * res.r2_os, res.cw_stat, res.cw_pvalue,
                             predict.stars(res.cw_pvalue), res.cw_defined, res.n_forecasts, res.n_excluded))
    write_table(out / "oos.csv", OOS_HEADER, rows)
    return 0


# -- synth -------------------------------------------------------------------

def cmd_synth(cfg: PipelineConfig, out: Path, args: argparse.Namespace) -> int:
    params = {}
    for item in args.param or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--param {key}: not a number") from None
    spec = synth.GeneratorSpec(args.kind, args.length, cfg.seed, params)
    try:
        values = synth.generate(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    path = out / f"{args.name or args.kind}.csv"
    if args.format == "returns":
        n = write_table(path, ("index", "value"), ((k, "%.17g" % v) for k, v in enumerate(values, start=1)))
    else:
        # a random walk is a log-price path; every other kind is a return series
        rets = np.diff(values, prepend=0.0) if args.kind == "random_walk" else values
        try:
            rows = synth.price_rows(rets, cfg.minutes_per_day, p0=args.p0)
            n = write_table(path, ("date", "time", "price"), ((d, t, "%.17g" % p) for d, t, p in rows))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    log.info("wrote %d rows to %s (%s, seed %d)", n, path, synth.PRNG, cfg.seed)
    return 0


# -- argument handling --------------------------------------------------------

def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="flat key = value config file")
    parser.add_argument("--out", default=d, help="output directory (overrides config 'output')")
    parser.add_argument("--threads", type=int, default=d, help="worker threads for per-window analysis")
    parser.add_argument("--seed", type=int, default=d, help="seed for synthetic generators")
    parser.add_argument("--input", action="append", default=d, help="input price table (repeatable)")
    parser.add_argument("--set", action="append", default=d, metavar="KEY=VALUE", help="override any config key")
    parser.add_argument("--figures", action="store_true", default=d, help="also render PNG figures")
    parser.add_argument("-v", "--verbose", action="store_true", default=d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfpredict", description=__doc__.splitlines()[0])
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("analyze", "per-window MF-DFA spectra and characteristics"),
        ("stats", "descriptive statistics and diagnostic tests of the characteristics"),
        ("regress", "Granger tests, in-sample predictive regressions and binned responses"),
        ("oos", "out-of-sample R2 and Clark-West tests"),
        ("synth", "write a synthetic fixture series"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p, suppress=True)
        if name == "synth":
            p.add_argument("--kind", required=True, choices=synth.KINDS)
            p.add_argument("--length", required=True, type=int)
            p.add_argument("--param", action="append", metavar="KEY=VALUE")
            p.add_argument("--format", choices=("returns", "prices"), default="returns")
            p.add_argument("--name", help="output file stem (default: kind)")
            p.add_argument("--p0", type=float, default=1000.0, help="initial price for --format prices")
    return parser


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config)
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    cfg = apply_overrides(cfg, overrides)
    if args.input:
        cfg.input = list(args.input)
    if args.out is not None:
        cfg.output = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    if args.seed is not None:
        cfg.seed = args.seed
    if args.figures:
        cfg.figures = True
    return cfg.validate()


COMMANDS = {"analyze": cmd_analyze, "stats": cmd_stats, "regress": cmd_regress, "oos": cmd_oos}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        _echo_config(cfg, out)
        if args.command == "synth":
            return cmd_synth(cfg, out, args)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IngestError, InsufficientDataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EmptyResultError, DegenerateInputError, DegenerateWindowError, DegenerateSpectrumError) as exc:
        print(f"degenerate result: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
