"""Command-line front end: simulate, estimate, backtest, reproduce.

Exit codes: 0 success, 2 usage error, 3 data validation error,
4 numeric/constraint violation.  A ``--config`` file of ``key = value``
lines supplies defaults; explicit flags override it.  All subcommands are
deterministic given their inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys

import numpy as np
import pandas as pd

from . import backtest as bt
from . import estimation, firstorder, futures
from .errors import (InsufficientDataError, InvalidInputError, MissingCarryError,
                     ParamConstraintError, SptlabError)
from .market import PricePanel, month_index, month_str
from .policies import parse_policy

USAGE_EXIT = 2
DATA_EXIT = 3
CONSTRAINT_EXIT = 4


def _read_config(path: str) -> dict[str, str]:
    out = {}
    p = pathlib.Path(path)
    if not p.exists():
        raise InvalidInputError(f"config file not found: {path}")
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise InvalidInputError(f"{path}:{lineno}: expected key = value")
        key, val = s.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _typed_defaults(sub: argparse.ArgumentParser, cfg: dict[str, str]) -> dict:
    """Convert config strings to the types of the subcommand's defaults."""
    dests = {a.dest: a.default for a in sub._actions}
    out = {}
    for key, val in cfg.items():
        if key not in dests or key in {"command", "config", "help"}:
            raise InvalidInputError(f"unknown config key {key!r}")
        default = dests[key]
        if isinstance(default, bool):
            out[key] = val.lower() in {"1", "true", "yes"}
        elif isinstance(default, int):
            out[key] = int(val)
        elif isinstance(default, float):
            out[key] = float(val)
        else:
            out[key] = val
    return out


def _require_file(path: str, what: str) -> pathlib.Path:
    p = pathlib.Path(path)
    if not p.exists():
        raise InvalidInputError(f"{what} file not found: {path}")
    return p


def _outdir(path: str) -> pathlib.Path:
    out = pathlib.Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    g = np.array([float(x) for x in args.g.split(",")])
    sigma = np.array([float(x) for x in args.sigma.split(",")])
    if sigma.size == 1:
        sigma = np.full(g.size, sigma[0])
    params = firstorder.FirstOrderParams(g=g, sigma=sigma)
    config = firstorder.SimConfig(steps=args.steps, dt=args.dt, seed=args.seed)
    panel = firstorder.simulate(params, config)
    out = _outdir(args.out)
    df = pd.DataFrame(panel.values, columns=panel.assets)
    df.insert(0, "date", [month_str(d) for d in panel.dates])
    df.to_csv(out / "panel.csv", index=False)
    with open(out / "params.json", "w") as fh:
        json.dump({"g": g.tolist(), "sigma": sigma.tolist(), "dt": args.dt,
                   "steps": args.steps, "seed": args.seed}, fh, indent=2)
        fh.write("\n")
    print(f"wrote {out / 'panel.csv'} ({panel.n_dates} rows, {panel.n_assets} assets)")
    return 0


def _load_wide_panel(path: str, dt: float) -> PricePanel:
    """Panel CSV in either wide (date + one column per asset) or long
    (date,asset,price) layout."""
    df = pd.read_csv(path, nrows=1)
    if {"date", "asset", "price"} <= set(df.columns):
        return PricePanel.from_csv(path, dt=dt)
    df = pd.read_csv(path, dtype={"date": str})
    if "date" not in df.columns:
        raise InvalidInputError(f"panel CSV {path} lacks a date column")
    dates = np.array([month_index(s) for s in df["date"]])
    assets = [c for c in df.columns if c != "date"]
    return PricePanel(assets=assets, dates=dates,
                      values=df[assets].to_numpy(dtype=float), dt=dt)


def cmd_estimate(args) -> int:
    _require_file(args.panel, "panel")
    panel = _load_wide_panel(args.panel, args.dt)
    if args.start or args.end:
        lo = month_index(args.start) if args.start else panel.dates[0]
        hi = month_index(args.end) if args.end else panel.dates[-1]
        rows = np.flatnonzero((panel.dates >= lo) & (panel.dates <= hi))
        panel = panel.window(int(rows[0]), int(rows[-1]) + 1)
    est = estimation.fit_first_order(panel)
    g_s = estimation.reflected_gaussian_filter(est.g, args.bandwidth)
    s_s = estimation.reflected_gaussian_filter(est.sigma, args.bandwidth)
    out = _outdir(args.out)
    with open(out / "estimate.json", "w") as fh:
        json.dump({"lambda": est.lam.tolist(), "gap_var": est.gap_var.tolist(),
                   "g": est.g.tolist(), "sigma": est.sigma.tolist(),
                   "g_smoothed": g_s.tolist(), "sigma_smoothed": s_s.tolist(),
                   "sample_span_years": est.sample_span, "n": est.n}, fh, indent=2)
        fh.write("\n")
    pd.DataFrame({"rank": np.arange(1, est.n + 1), "g": est.g, "sigma": est.sigma,
                  "g_smoothed": g_s, "sigma_smoothed": s_s}).to_csv(
        out / "estimate.csv", index=False)
    print(f"wrote {out / 'estimate.json'}")
    return 0


def _ingest(quotes_path: str):
    book = futures.QuoteBook.from_csv(_require_file(quotes_path, "quotes"))
    implied = {c: futures.build_implied_series(book, c) for c in book.commodities}
    panel = futures.normalize_entries(list(implied.values()))
    calendar = futures.eligibility({c: s.entry_month for c, s in implied.items()})
    return book, implied, panel, calendar


def cmd_backtest(args) -> int:
    try:
        policies = [parse_policy(tok) for tok in args.policies.split(";") if tok.strip()]
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    if args.quotes:
        book, implied, panel, calendar = _ingest(args.quotes)
        if args.panel:
            panel = _load_wide_panel(args.panel, args.dt)
    elif args.panel:
        book, implied, calendar = None, None, None
        panel = _load_wide_panel(args.panel, args.dt)
    else:
        print("error: need --panel and/or --quotes", file=sys.stderr)
        return USAGE_EXIT
    start = month_index(args.start) if args.start else None
    if (start is not None and calendar is not None
            and calendar.portfolio_start is not None
            and start < calendar.portfolio_start):
        print(f"warning: --start {args.start} precedes eligibility; clipped to "
              f"{month_str(calendar.portfolio_start)}", file=sys.stderr)
        start = calendar.portfolio_start
    report = bt.run_backtest(panel, policies, book=book, implied=implied,
                             calendar=calendar, start=start)
    out = _outdir(args.out)
    report.write(out)
    print(bt.summary_table(report))
    return 0


def cmd_reproduce(args) -> int:
    book, implied, panel, calendar = _ingest(args.quotes)
    out = _outdir(args.out)

    # relative log-price fan
    logx = panel.log_values()
    rel = logx - np.nanmean(logx, axis=1, keepdims=True)
    fan = pd.DataFrame(rel, columns=panel.assets)
    fan.insert(0, "date", [month_str(d) for d in panel.dates])
    fan.to_csv(out / "prices_relative.csv", index=False)

    policies = [parse_policy(s) for s in
                ("market", "equal", "diversity:-0.5", "reverse")]
    report = bt.run_backtest(panel, policies, book=book, implied=implied,
                             calendar=calendar)
    report._frame({n: report.cumulative(n) for n in report.policies}).to_csv(
        out / "cumulative_returns.csv", index=False)
    report._frame({n: report.relative(n) for n in report.policies}).to_csv(
        out / "relative_returns.csv", index=False)
    report._frame({n: np.cumsum(report.gamma_star[n]) for n in report.policies}).to_csv(
        out / "gamma_star.csv", index=False)
    report._frame({n: np.cumsum(report.carry[n]) for n in report.policies}).to_csv(
        out / "carry.csv", index=False)

    # fixed-n estimation window: after the last entry
    last_entry = max(s.entry_month for s in implied.values())
    rows = np.flatnonzero(panel.dates >= last_entry)
    window = panel.window(int(rows[0]), panel.n_dates)
    est = estimation.fit_first_order(window)
    g_s = estimation.reflected_gaussian_filter(est.g, args.bandwidth)
    s_s = estimation.reflected_gaussian_filter(est.sigma, args.bandwidth)
    ranks = np.arange(1, est.n + 1)
    pd.DataFrame({"rank": ranks, "g": est.g, "g_smoothed": g_s}).to_csv(
        out / "g_params.csv", index=False)
    pd.DataFrame({"rank": ranks, "sigma": est.sigma, "sigma_smoothed": s_s}).to_csv(
        out / "sigma_params.csv", index=False)

    data_curve = estimation.rank_size_curve(window)
    steps = window.n_dates - 1
    ranked0 = -np.sort(-window.log_values()[0])
    sim_curve = estimation.simulated_rank_size_curve(
        est.params, steps=steps, dt=window.dt, paths=args.paths, seed=args.seed,
        initial_log_prices=ranked0)
    pd.DataFrame({"rank": ranks, "data": data_curve, "simulated": sim_curve}).to_csv(
        out / "rank_size.csv", index=False)
    print(f"wrote 8 CSVs to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sptlab")
    sub = parser.add_subparsers(dest="command", required=True)
    parser._sptlab_subs = {}  # command name -> subparser, for config defaults

    p = sub.add_parser("simulate", help="simulate a rank-based market panel")
    p.add_argument("--config", default="")
    p.add_argument("--g", default="-0.04,-0.02,0.0,0.02,0.04",
                   help="comma-separated rank growth rates (must sum to 0)")
    p.add_argument("--sigma", default="0.2",
                   help="rank volatilities; a single value is broadcast")
    p.add_argument("--steps", type=int, default=2520)
    p.add_argument("--dt", type=float, default=1.0 / 252.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="sim_out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="fit a first-order approximation to a panel")
    p.add_argument("--config", default="")
    p.add_argument("--panel", required=True)
    p.add_argument("--dt", type=float, default=1.0 / 12.0)
    p.add_argument("--start", default="", help="window start YYYY-MM")
    p.add_argument("--end", default="", help="window end YYYY-MM")
    p.add_argument("--bandwidth", type=float, default=6.0)
    p.add_argument("--out", default="est_out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("backtest", help="backtest weight policies")
    p.add_argument("--config", default="")
    p.add_argument("--panel", default="")
    p.add_argument("--quotes", default="")
    p.add_argument("--policies", default="market;equal;diversity:-0.5;reverse",
                   help="semicolon-separated policy specs")
    p.add_argument("--start", default="", help="first rebalance month YYYY-MM")
    p.add_argument("--dt", type=float, default=1.0 / 12.0)
    p.add_argument("--out", default="bt_out")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("reproduce", help="run the full pipeline on a quote file")
    p.add_argument("--config", default="")
    p.add_argument("--quotes", required=True)
    p.add_argument("--bandwidth", type=float, default=6.0)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="repro_out")
    p.set_defaults(func=cmd_reproduce)

    for name, action in sub.choices.items():
        parser._sptlab_subs[name] = action
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", ""):
            # config supplies defaults; explicit flags win on the re-parse
            sub = parser._sptlab_subs[args.command]
            sub.set_defaults(**_typed_defaults(sub, _read_config(args.config)))
            args = parser.parse_args(argv)
        return args.func(args)
    except ParamConstraintError as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return CONSTRAINT_EXIT
    except (InvalidInputError, InsufficientDataError, MissingCarryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except SptlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
