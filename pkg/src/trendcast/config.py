"""Resolved run configuration: defaults < config file < CLI flags.

The config file is flat `key = value` text; `#` starts a comment. Every key
can also be set from the command line, and flags win.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .errors import ParseError

ADF_REGRESSION = "c"  # intercept-only unit-root regression, fixed


@dataclass(frozen=True)
class Config:
    window_start: dt.date = dt.date(2020, 4, 9)
    window_end: dt.date = dt.date(2020, 7, 7)
    diff_order_cases: int = 2
    diff_order_trends: int = 1
    max_lag: int = 14
    ma_window: int = 7
    seed: int = 0
    group: str = "all"
    hidden_sizes: tuple[int, ...] = (32, 32, 32)
    lstm_window: int = 7
    dropout: float = 0.2
    learning_rate: float = 1e-3
    epochs: int = 150
    min_samples: int = 20
    snapshot_fetch_date: str = ""

    def validate(self) -> "Config":
        if self.window_end < self.window_start:
            raise ParseError("window_end precedes window_start")
        if self.group not in ("paper", "all"):
            raise ParseError(f"group must be 'paper' or 'all', got {self.group!r}")
        if self.max_lag < 1 or self.ma_window < 1 or self.lstm_window < 1:
            raise ParseError("max_lag, ma_window and lstm_window must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ParseError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.diff_order_cases < 0 or self.diff_order_trends < 0:
            raise ParseError("differencing orders must be non-negative")
        return self

    def echo(self) -> dict:
        """JSON-ready dump of the resolved configuration."""
        data = asdict(self)
        data["window_start"] = self.window_start.isoformat()
        data["window_end"] = self.window_end.isoformat()
        data["hidden_sizes"] = list(self.hidden_sizes)
        data["adf_regression"] = ADF_REGRESSION
        return data


_PARSERS = {
    "window_start": dt.date.fromisoformat,
    "window_end": dt.date.fromisoformat,
    "diff_order_cases": int,
    "diff_order_trends": int,
    "max_lag": int,
    "ma_window": int,
    "seed": int,
    "group": str,
    "hidden_sizes": lambda raw: tuple(int(x) for x in raw.split(",") if x.strip()),
    "lstm_window": int,
    "dropout": float,
    "learning_rate": float,
    "epochs": int,
    "min_samples": int,
    "snapshot_fetch_date": str,
}


def read_config_file(path: str | Path) -> dict:
    """Parse flat key = value text into typed config fields."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: file not found")
    values: dict = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        parser = _PARSERS.get(key)
        if parser is None:
            raise ParseError(f"{path}:{line_no}: unknown key {key!r}")
        try:
            values[key] = parser(value)
        except ValueError as exc:
            raise ParseError(f"{path}:{line_no}: bad value for {key}: {exc}") from None
    return values


def resolve(file_path: str | Path | None = None, **overrides) -> Config:
    """Layer defaults, an optional config file, and non-None overrides."""
    cfg = Config()
    if file_path is not None:
        cfg = replace(cfg, **read_config_file(file_path))
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    if "hidden_sizes" in cleaned and isinstance(cleaned["hidden_sizes"], str):
        cleaned["hidden_sizes"] = _PARSERS["hidden_sizes"](cleaned["hidden_sizes"])
    return replace(cfg, **cleaned).validate()
