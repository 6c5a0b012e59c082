"""Pipeline configuration: flat ``key = value`` text with validated defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import IO, Any

from .exceptions import ConfigError

LIST_INT = ("lb_lags", "arch_lags", "spectra_windows")
LIST_STR = ("input", "oos_schemes")
AUTO_INT = ("adf_max_lag", "nw_lag")


@dataclass
class PipelineConfig:
    input: list[str] = field(default_factory=list)
    date_col: str = "date"
    time_col: str = "time"
    price_col: str = "price"
    delimiter: str = ","
    header: bool = True
    minutes_per_day: int = 240
    window_days: int = 5
    stride: int = 1
    q_min: float = -4.0
    q_max: float = 8.0
    q_step: float = 0.25
    s_min: int = 20
    s_max_fraction: float = 0.25
    n_scales: int = 20
    scale_spacing: str = "log"
    poly_order: int = 1
    rf: str = "0"  # constant daily rate or path to a date,rate table
    shape_tol: float = 0.01
    granger_lag: int = 1
    lb_lags: list[int] = field(default_factory=lambda: [30, 50])
    arch_lags: list[int] = field(default_factory=lambda: [1, 5, 10, 15])
    adf_max_lag: int | None = None  # None = automatic
    nw_lag: int | None = None  # None = automatic
    oos_initial: int = 600
    oos_schemes: list[str] = field(default_factory=lambda: ["moving", "expanding"])
    spectra_windows: list[int] = field(default_factory=list)
    figures: bool = False
    output: str = "out"
    seed: int = 0
    threads: int = 1

    def validate(self) -> "PipelineConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.minutes_per_day >= 2, "minutes_per_day must be >= 2")
        need(self.window_days >= 1, "window_days must be >= 1")
        need(self.stride >= 1, "stride must be >= 1")
        need(self.q_step > 0 and self.q_max > self.q_min, "need q_max > q_min and q_step > 0")
        steps = (self.q_max - self.q_min) / self.q_step
        need(abs(steps - round(steps)) < 1e-9 and round(steps) >= 2, "q range must hold >= 3 grid points of q_step")
        need(self.q_min < 0 < self.q_max, "q grid must bracket 0")
        need(self.poly_order >= 0, "poly_order must be >= 0")
        need(self.s_min >= self.poly_order + 2, "s_min must be >= poly_order + 2")
        need(0 < self.s_max_fraction <= 0.25, "s_max_fraction must lie in (0, 0.25]")
        need(self.n_scales >= 3, "n_scales must be >= 3")
        need(self.scale_spacing in ("log", "dyadic"), "scale_spacing must be log or dyadic")
        need(self.shape_tol >= 0, "shape_tol must be >= 0")
        need(self.granger_lag >= 1, "granger_lag must be >= 1")
        need(all(k >= 1 for k in self.lb_lags), "lb_lags must be positive")
        need(all(k >= 1 for k in self.arch_lags), "arch_lags must be positive")
        need(self.adf_max_lag is None or self.adf_max_lag >= 0, "adf_max_lag must be >= 0")
        need(self.nw_lag is None or self.nw_lag >= 0, "nw_lag must be >= 0")
        need(self.oos_initial >= 2, "oos_initial must be >= 2")
        need(self.oos_schemes and set(self.oos_schemes) <= {"moving", "expanding"}, "oos_schemes must be moving and/or expanding")
        need(self.threads >= 1, "threads must be >= 1")
        need(len(self.delimiter) == 1, "delimiter must be a single character")
        return self

    def mfdfa_kwargs(self) -> dict[str, Any]:
        from .mfdfa import q_grid

        return dict(
            qs=q_grid(self.q_min, self.q_max, self.q_step),
            order=self.poly_order,
            s_min=self.s_min,
            s_max_fraction=self.s_max_fraction,
            n_scales=self.n_scales,
            spacing=self.scale_spacing,
        )

    def dump(self, stream: IO[str]) -> None:
        """Write every resolved key, sorted, one per line."""
        for f in sorted(fields(self), key=lambda f: f.name):
            stream.write(f"{f.name} = {_format(getattr(self, f.name))}\n")


def _format(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(name: str, text: str, template: PipelineConfig) -> Any:
    text = text.strip()
    if name in LIST_INT:
        return [int(t) for t in text.split(",") if t.strip()]
    if name in LIST_STR:
        return [t.strip() for t in text.split(",") if t.strip()]
    if name in AUTO_INT:
        return None if text.lower() == "auto" else int(text)
    current = getattr(template, name)
    if isinstance(current, bool):
        return _parse_bool(text)
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float):
        return float(text)
    return text


def apply_overrides(cfg: PipelineConfig, items: dict[str, str]) -> PipelineConfig:
    known = {f.name for f in fields(cfg)}
    updates = {}
    for key, text in items.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            updates[key] = _coerce(key, text, cfg)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return dataclasses.replace(cfg, **updates)


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    items = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in items:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        items[key] = value
    return apply_overrides(base or PipelineConfig(), items)


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
