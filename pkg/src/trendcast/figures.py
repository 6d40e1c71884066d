"""Matplotlib figure rendering for the report path.

Figures are written next to the delimited output with fixed PNG metadata
so identical runs produce identical bytes.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates
import matplotlib.pyplot as plt

_PNG_METADATA = {"Software": "trendcast"}


def _save(fig, path: str | Path) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=110, metadata=_PNG_METADATA)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def _date_axis(ax) -> None:
    locator = mdates.AutoDateLocator()
    ax.xaxis.set_major_locator(locator)
    ax.xaxis.set_major_formatter(mdates.ConciseDateFormatter(locator))


def render_trends_figure(
    path: str | Path,
    region: str,
    dates,
    cases_ma,
    restaurant_ma,
    bar_ma,
    window: int,
) -> None:
    """Moving averages of the three normalized series for one region."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(dates, cases_ma, label="new cases", color="tab:red", lw=1.8)
    ax.plot(dates, restaurant_ma, label="restaurant searches", color="tab:blue", lw=1.4)
    ax.plot(dates, bar_ma, label="bar searches", color="tab:green", lw=1.4)
    ax.set_title(f"{region}: {window}-day moving averages (normalized 0-100)")
    ax.set_ylabel("normalized interest / cases")
    ax.legend(loc="upper left", frameon=False)
    ax.grid(alpha=0.3)
    _date_axis(ax)
    fig.tight_layout()
    _save(fig, path)


def render_predictions_figure(
    path: str | Path,
    region: str,
    model_name: str,
    dates,
    actuals,
    predictions,
) -> None:
    """Held-out actual vs predicted next-day cases for one model."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(dates, actuals, label="actual", color="black", lw=1.6)
    ax.plot(dates, predictions, label="predicted", color="tab:orange", lw=1.4, ls="--")
    ax.set_title(f"{region}: next-day cases, {model_name} model (test period)")
    ax.set_ylabel("normalized new cases")
    ax.legend(loc="upper left", frameon=False)
    ax.grid(alpha=0.3)
    _date_axis(ax)
    fig.tight_layout()
    _save(fig, path)
