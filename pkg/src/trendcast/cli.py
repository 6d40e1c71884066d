"""Command-line driver for the analysis pipeline.

Subcommands:

    convert    tracking-project JSON export -> canonical cases CSV
    analyze    causality tables: granger.csv, pearson.csv, report.json
    forecast   rmse.csv, per-region prediction traces and figures
    plotdata   per-region moving-average CSVs and figures
    synth      seeded synthetic bundle in the canonical CSV formats

Exit codes: 0 success, 2 input/parse error, 3 empty region/date
intersection, 4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, figures, ingest
from .causal import granger_test, pearson, select_lag
from .config import Config, resolve
from .errors import DataWarning, EmptyIntersection, ParseError, PipelineError
from .lstm import (
    FeatureSet,
    evaluate,
    init_network,
    make_windows,
    split_70_30,
    train,
)
from .report import (
    RegionReport,
    atomic_write_text,
    fmt6,
    granger_csv,
    granger_table,
    merge_report_json,
    pearson_csv,
    pearson_table,
    predictions_csv,
    rmse_csv,
    rmse_table,
)
from .rng import derive_seed
from .series import RegionDataset, TimeSeries, difference, moving_average, normalize_0_100
from .synth import Kind, SyntheticSpec, generate

_RANKING_RULE = (
    "regions ranked by the 7-day trailing moving average of raw daily new "
    "cases on the final available date; ties broken by region code"
)

_FEATURE_SETS = {
    "baseline": FeatureSet.CASES_ONLY,
    "plus_restaurant": FeatureSet.CASES_PLUS_RESTAURANT,
    "plus_bar": FeatureSet.CASES_PLUS_BAR,
}


# ---------------------------------------------------------------------------
# Shared pipeline pieces
# ---------------------------------------------------------------------------

def _load_inputs(args, cfg: Config, need_trends: bool = True):
    """Load cases plus whichever trends files were supplied.

    Returns (raw_cases, restaurant_map, bar_map, load_warnings); trend maps
    are None when their flag was omitted and need_trends is False.
    """
    window = (cfg.window_start, cfg.window_end)
    messages: list[str] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        raw_cases = ingest.load_cases_csv(args.cases, window=window)
        restaurant = bar = None
        if args.trends_restaurant is not None:
            restaurant = ingest.load_trends_csv(
                args.trends_restaurant, "restaurant", window=window
            )
        elif need_trends:
            raise ParseError("--trends-restaurant is required for this command")
        if args.trends_bar is not None:
            bar = ingest.load_trends_csv(args.trends_bar, "bar", window=window)
        elif need_trends:
            raise ParseError("--trends-bar is required for this command")
    messages.extend(str(w.message) for w in caught)
    return raw_cases, restaurant, bar, messages


def rank_regions(raw_cases: dict[str, TimeSeries], window: int = 7) -> list[str]:
    """Region codes ordered by smoothed raw cases on the final date."""
    scored = []
    for region in sorted(raw_cases):
        ts = raw_cases[region]
        w = min(window, len(ts))
        score = float(moving_average(ts, w).values[-1])
        scored.append((-score, region))
    scored.sort()
    return [region for _, region in scored]


def _paper_groups(ranking: list[str]) -> dict[str, list[str]]:
    return {
        "highest": ranking[:10],
        "lowest": ranking[-10:][::-1],
    }


def _analyze_region(payload) -> RegionReport:
    """Full causality pipeline for one region (parallel-map worker)."""
    dataset, cfg = payload
    rep = RegionReport(region=dataset.region)
    cases_diff = difference(dataset.cases, cfg.diff_order_cases)
    for query in ("restaurant", "bar"):
        trend = getattr(dataset, query)
        trend_diff = difference(trend, cfg.diff_order_trends)
        common = sorted(set(cases_diff.dates) & set(trend_diff.dates))
        cd = cases_diff.restrict(common)
        td = trend_diff.restrict(common)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            lag = select_lag([td, cd], max_lag=cfg.max_lag)
        rep.warnings.extend(f"{query}: {w.message}" for w in caught)
        rep.granger_lags[query] = lag
        rep.granger[(query, "cases")] = granger_test(td, cd, lag)
        rep.granger[("cases", query)] = granger_test(cd, td, lag)
        rep.pearson[f"{query}_vs_cases"] = pearson(trend, dataset.cases)
    return rep


def _forecast_region(payload) -> tuple[RegionReport, dict]:
    """Train/evaluate the configured models for one region.

    Returns the report plus per-model prediction traces
    {name: (dates, evaluation)}.
    """
    dataset, cfg, model_names = payload
    rep = RegionReport(region=dataset.region)
    traces: dict = {}
    for name in model_names:
        feature_set = _FEATURE_SETS[name]
        supervised = make_windows(dataset, cfg.lstm_window, feature_set)
        if len(supervised) < cfg.min_samples:
            rep.warnings.append(
                f"{name}: {len(supervised)} samples < min_samples={cfg.min_samples}, skipped"
            )
            continue
        train_set, test_set = split_70_30(supervised)
        net = init_network(
            cfg.hidden_sizes,
            cfg.lstm_window,
            feature_set.n_features,
            cfg.dropout,
            seed=derive_seed(cfg.seed, dataset.region, name),
        )
        fitted = train(net, train_set, epochs=cfg.epochs, learning_rate=cfg.learning_rate)
        evaluation = evaluate(fitted, test_set)
        rep.forecasts[name] = evaluation
        traces[name] = (test_set.sample_dates, evaluation)
    return rep, traces


def _parallel_map(worker, payloads, jobs: int):
    if jobs <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, payloads))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_convert(args) -> int:
    count = ingest.convert_tracking_json(args.input, args.output)
    print(f"wrote {count} rows to {args.output}", file=sys.stderr)
    return 0


def cmd_analyze(args) -> int:
    cfg = _config_from_args(args)
    out_dir = _ensure_out_dir(args)
    raw_cases, restaurant, bar, load_warnings = _load_inputs(args, cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        datasets = ingest.build_datasets(raw_cases, restaurant, bar)
    load_warnings.extend(str(w.message) for w in caught)

    reports = _parallel_map(
        _analyze_region, [(ds, cfg) for ds in datasets], args.jobs
    )
    ranking = rank_regions(
        {ds.region: raw_cases[ds.region] for ds in datasets}, cfg.ma_window
    )

    atomic_write_text(out_dir / "granger.csv", granger_csv(reports))
    atomic_write_text(out_dir / "pearson.csv", pearson_csv(reports))
    meta = {
        "command": "analyze",
        "config": cfg.echo(),
        "warnings": load_warnings,
        "ranking_rule": _RANKING_RULE,
        "ranking": ranking,
    }
    if cfg.group == "paper":
        groups = _paper_groups(ranking)
        meta["groups"] = groups
        for label, regions in groups.items():
            atomic_write_text(
                out_dir / f"granger_paper_{label}.csv", granger_table(reports, regions)
            )
            atomic_write_text(
                out_dir / f"pearson_paper_{label}.csv", pearson_table(reports, regions)
            )
    merge_report_json(out_dir / "report.json", {"analyze": meta}, reports)
    print(f"analyzed {len(reports)} regions -> {out_dir}", file=sys.stderr)
    return 0


def cmd_forecast(args) -> int:
    cfg = _config_from_args(args)
    out_dir = _ensure_out_dir(args)
    raw_cases, restaurant, bar, load_warnings = _load_inputs(args, cfg, need_trends=False)
    model_names = ["baseline"]
    if restaurant is not None:
        model_names.append("plus_restaurant")
    if bar is not None:
        model_names.append("plus_bar")

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        datasets = _forecast_datasets(raw_cases, restaurant, bar)
    load_warnings.extend(str(w.message) for w in caught)

    results = _parallel_map(
        _forecast_region, [(ds, cfg, model_names) for ds in datasets], args.jobs
    )
    reports = [rep for rep, _ in results]

    for rep, traces in results:
        for name, (dates, evaluation) in traces.items():
            atomic_write_text(
                out_dir / f"predictions_{rep.region}_{name}.csv",
                predictions_csv(evaluation, dates),
            )
            if not args.no_figures:
                figures.render_predictions_figure(
                    out_dir / f"fig_predictions_{rep.region}_{name}.png",
                    rep.region,
                    name,
                    dates,
                    evaluation.actuals,
                    evaluation.predictions,
                )

    atomic_write_text(out_dir / "rmse.csv", rmse_csv(reports))
    meta = {
        "command": "forecast",
        "config": cfg.echo(),
        "warnings": load_warnings,
        "models": model_names,
    }
    if cfg.group == "paper":
        ranking = rank_regions(
            {ds.region: raw_cases[ds.region] for ds in datasets}, cfg.ma_window
        )
        groups = _paper_groups(ranking)
        meta["groups"] = groups
        for label, regions in groups.items():
            atomic_write_text(
                out_dir / f"rmse_paper_{label}.csv", rmse_table(reports, regions)
            )
    merge_report_json(out_dir / "report.json", {"forecast": meta}, reports)
    print(f"forecast {len(reports)} regions -> {out_dir}", file=sys.stderr)
    return 0


def _forecast_datasets(raw_cases, restaurant, bar) -> list[RegionDataset]:
    """Datasets for forecasting, tolerating missing trend sources.

    With both trends present this is the normal assembly; a missing source
    is replaced per-region by an all-zero placeholder series that only the
    skipped feature sets would read.
    """
    if restaurant is not None and bar is not None:
        return ingest.build_datasets(raw_cases, restaurant, bar)
    datasets = []
    for region in sorted(raw_cases):
        try:
            cases = normalize_0_100(raw_cases[region])
        except PipelineError:
            warnings.warn(f"region {region}: constant cases series, excluded", DataWarning)
            continue
        parts = {}
        for name, source in (("restaurant", restaurant), ("bar", bar)):
            if source is None:
                parts[name] = cases.with_values(np.zeros(len(cases)), name=name)
            elif region in source:
                common = sorted(set(cases.dates) & set(source[region].dates))
                if not common:
                    parts = None
                    break
                parts[name] = source[region].restrict(common)
            else:
                parts = None
                break
        if parts is None:
            warnings.warn(f"region {region}: missing trend source, excluded", DataWarning)
            continue
        common = sorted(
            set(cases.dates)
            & set(parts["restaurant"].dates)
            & set(parts["bar"].dates)
        )
        datasets.append(
            RegionDataset(
                region=region,
                cases=cases.restrict(common),
                restaurant=parts["restaurant"].restrict(common),
                bar=parts["bar"].restrict(common),
            )
        )
    if not datasets:
        raise EmptyIntersection("no usable region for forecasting")
    return datasets


def cmd_plotdata(args) -> int:
    cfg = _config_from_args(args)
    out_dir = _ensure_out_dir(args)
    raw_cases, restaurant, bar, _ = _load_inputs(args, cfg)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        datasets = ingest.build_datasets(raw_cases, restaurant, bar)
    window = cfg.ma_window
    for ds in datasets:
        smoothed = {
            name: moving_average(getattr(ds, name), window)
            for name in ("cases", "restaurant", "bar")
        }
        dates = smoothed["cases"].dates
        lines = ["date,cases_ma,restaurant_ma,bar_ma"]
        for i, day in enumerate(dates):
            lines.append(
                f"{day.isoformat()},"
                + ",".join(
                    fmt6(smoothed[name].values[i])
                    for name in ("cases", "restaurant", "bar")
                )
            )
        atomic_write_text(out_dir / f"ma_{ds.region}.csv", "\n".join(lines) + "\n")
        if not args.no_figures:
            figures.render_trends_figure(
                out_dir / f"fig_trends_{ds.region}.png",
                ds.region,
                dates,
                smoothed["cases"].values,
                smoothed["restaurant"].values,
                smoothed["bar"].values,
                window,
            )
    print(f"plot data for {len(datasets)} regions -> {out_dir}", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    out_dir = _ensure_out_dir(args)
    regions = sorted(ingest.US_REGIONS)[: args.regions]
    cases_map: dict[str, TimeSeries] = {}
    restaurant_map: dict[str, TimeSeries] = {}
    bar_map: dict[str, TimeSeries] = {}
    for idx, region in enumerate(regions):
        pair_spec = SyntheticSpec(
            kind=Kind.COUPLED_PAIR,
            length=args.days,
            beta=args.beta,
            lag=args.lag,
            phi=args.phi,
            noise_sigma=args.noise_sigma,
            seed=derive_seed(args.seed, region, "pair"),
            region=region,
        )
        cause, effect = generate(pair_spec)
        bar_series = generate(
            SyntheticSpec(
                kind=Kind.AR1,
                length=args.days,
                phi=args.phi,
                noise_sigma=args.noise_sigma,
                seed=derive_seed(args.seed, region, "bar"),
                region=region,
            )
        )[0]
        # integer 0-100 search interest; cases scaled to a region-specific
        # peak so the top-10 ranking has real spread
        restaurant_map[region] = _to_trend(cause, "restaurant")
        bar_map[region] = _to_trend(bar_series, "bar")
        peak = 150.0 + 40.0 * idx
        cases_map[region] = _to_counts(effect, peak)
    ingest.write_cases_csv(Path(out_dir) / "cases.csv", cases_map)
    ingest.write_trends_csv(
        Path(out_dir) / "trends_restaurant.csv", "restaurant", restaurant_map
    )
    ingest.write_trends_csv(Path(out_dir) / "trends_bar.csv", "bar", bar_map)
    print(
        f"synthetic bundle: {len(regions)} regions x {args.days} days -> {out_dir}",
        file=sys.stderr,
    )
    return 0


def _to_trend(ts: TimeSeries, name: str) -> TimeSeries:
    normalized = normalize_0_100(ts)
    return TimeSeries(
        name, ts.region, normalized.dates, np.rint(normalized.values)
    )


def _to_counts(ts: TimeSeries, peak: float) -> TimeSeries:
    normalized = normalize_0_100(ts)
    counts = np.rint(normalized.values / 100.0 * peak)
    return TimeSeries("cases", ts.region, normalized.dates, counts)


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def _config_from_args(args) -> Config:
    return resolve(
        args.config,
        window_start=getattr(args, "window_start", None),
        window_end=getattr(args, "window_end", None),
        seed=args.seed,
        group=getattr(args, "group", None),
        max_lag=getattr(args, "max_lag", None),
        ma_window=getattr(args, "ma_window", None),
        epochs=getattr(args, "epochs", None),
        hidden_sizes=getattr(args, "hidden_sizes", None),
    )


def _ensure_out_dir(args) -> Path:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _add_common(sub, trends_required: bool = False) -> None:
    sub.add_argument("--cases", required=True, help="canonical cases CSV")
    sub.add_argument("--trends-restaurant", default=None, help="restaurant trends CSV")
    sub.add_argument("--trends-bar", default=None, help="bar trends CSV")
    sub.add_argument("--config", default=None, help="flat key=value config file")
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--group", choices=["paper", "all"], default=None)
    sub.add_argument("--out-dir", default=".", help="output directory")
    sub.add_argument("--ma-window", type=int, default=None)
    sub.add_argument("--max-lag", type=int, default=None)
    sub.add_argument("--window-start", type=_iso_date, default=None)
    sub.add_argument("--window-end", type=_iso_date, default=None)
    sub.add_argument("--jobs", type=int, default=1, help="parallel region workers")


def _iso_date(raw: str) -> dt.date:
    return dt.date.fromisoformat(raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trendcast",
        description="Causality and forecasting over case-count and search-interest series",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    convert = subs.add_parser("convert", help="tracking-project JSON -> cases CSV")
    convert.add_argument("--input", required=True)
    convert.add_argument("--output", required=True)
    convert.set_defaults(func=cmd_convert)

    analyze = subs.add_parser("analyze", help="Granger and Pearson tables")
    _add_common(analyze)
    analyze.set_defaults(func=cmd_analyze)

    forecast = subs.add_parser("forecast", help="train forecasters, write RMSE tables")
    _add_common(forecast)
    forecast.add_argument("--epochs", type=int, default=None)
    forecast.add_argument("--hidden-sizes", dest="hidden_sizes", default=None)
    forecast.add_argument("--no-figures", action="store_true")
    forecast.set_defaults(func=cmd_forecast)

    plotdata = subs.add_parser("plotdata", help="moving-average plot data and figures")
    _add_common(plotdata)
    plotdata.add_argument("--no-figures", action="store_true")
    plotdata.set_defaults(func=cmd_plotdata)

    synth = subs.add_parser("synth", help="write a synthetic bundle")
    synth.add_argument("--out-dir", default=".")
    synth.add_argument("--regions", type=int, default=45)
    synth.add_argument("--days", type=int, default=90)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--beta", type=float, default=0.8)
    synth.add_argument("--lag", type=int, default=2)
    synth.add_argument("--phi", type=float, default=0.5)
    synth.add_argument("--noise-sigma", type=float, default=1.0)
    synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EmptyIntersection as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
