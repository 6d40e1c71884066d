"""Report assembly and rendering: CSV tables, paper-style tables, JSON.

Numbers are rendered with 6 significant digits through one formatter, and
report.json stores exactly the rounded values, so any numeric CSV cell
parses back to the JSON number bit-for-bit. P-values below 0.001 render as
"<0.001" in the paper-layout tables only. All files are written atomically
(temp + rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .causal import GrangerResult, PearsonResult
from .lstm import ForecastEvaluation

GRANGER_DIRECTIONS = (
    ("restaurant", "cases"),
    ("bar", "cases"),
    ("cases", "restaurant"),
    ("cases", "bar"),
)
PEARSON_PAIRS = ("restaurant_vs_cases", "bar_vs_cases")
FEATURE_COLUMNS = ("baseline", "plus_restaurant", "plus_bar")


def fmt6(x: float) -> str:
    """6-significant-digit rendering shared by every artifact."""
    return format(float(x), ".6g")


def round6(x: float) -> float:
    """The float a fmt6-rendered cell parses back to."""
    return float(fmt6(x))


def render_p(p: float) -> str:
    """Paper-style p-value: values below 0.001 render as '<0.001'."""
    return "<0.001" if p < 0.001 else fmt6(p)


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RegionReport:
    """Everything the tables show for one region, plus provenance."""

    region: str
    granger: dict[tuple[str, str], GrangerResult] = field(default_factory=dict)
    pearson: dict[str, PearsonResult] = field(default_factory=dict)
    forecasts: dict[str, ForecastEvaluation] = field(default_factory=dict)
    granger_lags: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_json_fragment(self) -> dict:
        out: dict = {}
        if self.granger:
            out["granger"] = [
                {
                    "cause": res.direction[0],
                    "effect": res.direction[1],
                    "lag": res.lag,
                    "f_stat": round6(res.f_stat),
                    "df_num": res.df_num,
                    "df_den": res.df_den,
                    "p_value": round6(float(res.p_value)),
                    "significant_at_05": res.significant_at_05,
                }
                for res in (self.granger[d] for d in GRANGER_DIRECTIONS if d in self.granger)
            ]
        if self.pearson:
            out["pearson"] = [
                {
                    "pair": pair,
                    "r": round6(res.r),
                    "p_value": round6(float(res.p_value)),
                    "n": res.n,
                }
                for pair, res in sorted(self.pearson.items())
            ]
        if self.forecasts:
            out["forecasts"] = {
                name: {
                    "rmse": round6(ev.rmse),
                    "n_test": ev.n_test,
                    "split_index": ev.split_index,
                }
                for name, ev in sorted(self.forecasts.items())
            }
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


# ---------------------------------------------------------------------------
# Long-format tables (one row per region/test)
# ---------------------------------------------------------------------------

def granger_csv(reports: list[RegionReport]) -> str:
    lines = ["region,cause,effect,lag,f_stat,df_num,df_den,p_value,significant_at_05"]
    for rep in reports:
        for direction in GRANGER_DIRECTIONS:
            res = rep.granger.get(direction)
            if res is None:
                continue
            lines.append(
                ",".join(
                    [
                        rep.region,
                        res.direction[0],
                        res.direction[1],
                        str(res.lag),
                        fmt6(res.f_stat),
                        str(res.df_num),
                        str(res.df_den),
                        fmt6(float(res.p_value)),
                        str(res.significant_at_05).lower(),
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def pearson_csv(reports: list[RegionReport]) -> str:
    lines = ["region,pair,r,p_value,n"]
    for rep in reports:
        for pair in PEARSON_PAIRS:
            res = rep.pearson.get(pair)
            if res is None:
                continue
            lines.append(
                ",".join(
                    [rep.region, pair, fmt6(res.r), fmt6(float(res.p_value)), str(res.n)]
                )
            )
    return "\n".join(lines) + "\n"


def rmse_csv(reports: list[RegionReport]) -> str:
    lines = ["region," + ",".join(FEATURE_COLUMNS)]
    for rep in reports:
        cells = [rep.region]
        for name in FEATURE_COLUMNS:
            ev = rep.forecasts.get(name)
            cells.append(fmt6(ev.rmse) if ev is not None else "")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def predictions_csv(ev: ForecastEvaluation, dates) -> str:
    lines = ["date,actual,predicted"]
    for day, actual, predicted in zip(dates, ev.actuals, ev.predictions):
        lines.append(f"{day.isoformat()},{fmt6(actual)},{fmt6(predicted)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Paper-layout tables (directed-test rows, region columns)
# ---------------------------------------------------------------------------

def granger_table(reports: list[RegionReport], regions: list[str]) -> str:
    by_region = {rep.region: rep for rep in reports}
    lines = ["causing->caused," + ",".join(regions)]
    for cause in ("restaurant", "bar"):
        cells = [f"{cause}->cases"]
        for region in regions:
            res = by_region[region].granger.get((cause, "cases"))
            cells.append(render_p(float(res.p_value)) if res else "")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def pearson_table(reports: list[RegionReport], regions: list[str]) -> str:
    by_region = {rep.region: rep for rep in reports}
    lines = ["correlation (r [p])," + ",".join(regions)]
    for query, pair in (("restaurant", "restaurant_vs_cases"), ("bar", "bar_vs_cases")):
        cells = [f"{query} vs cases"]
        for region in regions:
            res = by_region[region].pearson.get(pair)
            cells.append(
                f"{fmt6(res.r)} [{render_p(float(res.p_value))}]" if res else ""
            )
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def rmse_table(reports: list[RegionReport], regions: list[str]) -> str:
    by_region = {rep.region: rep for rep in reports}
    labels = {
        "baseline": "baseline",
        "plus_restaurant": "baseline+restaurants",
        "plus_bar": "baseline+bars",
    }
    lines = ["model," + ",".join(regions)]
    for name in FEATURE_COLUMNS:
        cells = [labels[name]]
        for region in regions:
            ev = by_region[region].forecasts.get(name) if region in by_region else None
            cells.append(fmt6(ev.rmse) if ev else "")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# report.json
# ---------------------------------------------------------------------------

def merge_report_json(
    path: str | Path,
    meta_update: dict,
    reports: list[RegionReport],
) -> None:
    """Create or update report.json, preserving sections written earlier.

    Region fragments merge key-by-key so `analyze` and `forecast` can share
    one report file in the same output directory.
    """
    path = Path(path)
    document: dict = {"meta": {}, "regions": {}}
    if path.exists():
        try:
            existing = json.loads(path.read_text(encoding="utf-8"))
            if isinstance(existing, dict):
                document["meta"] = existing.get("meta", {}) or {}
                document["regions"] = existing.get("regions", {}) or {}
        except json.JSONDecodeError:
            pass  # unreadable previous report: overwrite
    document["meta"].update(meta_update)
    for rep in reports:
        slot = document["regions"].setdefault(rep.region, {})
        slot.update(rep.to_json_fragment())
    atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")
