"""Command-line front end: simulate, sweep, analyze, fit, hist.

Exit codes partition the error classes: 0 success, 2 configuration,
3 I/O, 4 file parsing, 5 insufficient statistics / degenerate data.
All outputs are deterministic functions of (config, seed): CSV values are
written with 6 significant digits, JSON summaries at full precision with
sorted keys.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import analysis, fitting, model, plots
from .config import CampaignConfig, ConfigError, load_config, replace_config
from .eventio import EventLogParseError, read_jsonl, write_jsonl
from .fitting import FitError, FitResult, SweepPoint
from .params import ParameterError
from .trialsim import EventLog, TrialMode, histogram, run_campaign

OUTDIR_ENV = "DLCZSIM_OUTDIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_STATS = 5

_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class DataParseError(ValueError):
    """Malformed delimited data file; message carries the line number."""


def _campaign_seed(seed: int, index: int) -> int:
    """Distinct 64-bit master seed for each campaign of a run."""
    return (seed ^ (index * _GOLDEN)) & _MASK64


def _fmt(value: float) -> str:
    return "%.6g" % value


def _resolve_outdir(arg_out: str | None, cfg: CampaignConfig) -> Path:
    out = arg_out or cfg.out_dir or os.environ.get(OUTDIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_cfg(args) -> CampaignConfig:
    cfg = load_config(args.config) if args.config else CampaignConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace_config(cfg, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {args.trials}")
        cfg = replace_config(cfg, n_trials=args.trials)
    return cfg


def _angle_tag(theta_s: float, theta_as: float) -> str:
    return f"s{theta_s:g}_as{theta_as:g}".replace(".", "p").replace("-", "m")


def _run_point(cfg: CampaignConfig, seed_base: int = 0):
    """Run the five campaigns of one operating point.

    Four heralded campaigns at the CHSH settings plus one fixed-cycle
    campaign with both analyzers at zero for the g2 and retrieval
    estimates.  Returns (logs, summary).
    """
    logs: dict[tuple[float, float], EventLog] = {}
    tables = []
    for i, (ts, tas) in enumerate(cfg.angles.chsh_combinations()):
        log = run_campaign(cfg.params, ts, tas, cfg.mode, cfg.n_trials,
                           _campaign_seed(cfg.seed, seed_base + i))
        logs[(ts, tas)] = log
        tables.append(analysis.tally(log))
    g2_log = run_campaign(cfg.params, 0.0, 0.0, TrialMode.G2, cfg.n_trials,
                          _campaign_seed(cfg.seed, seed_base + 4))
    logs[(0.0, 0.0)] = g2_log
    tables.append(analysis.tally(g2_log))
    table = analysis.merge_counts(tables)

    b = model.background_b(cfg.params.tau_w, cfg.params.k_bg)
    p_s = analysis.singles_probability(table, "S")
    p_as = analysis.singles_probability(table, "AS")
    g2 = analysis.g2_estimate(table)
    gamma = analysis.retrieval_estimate(table, cfg.params.eta_as,
                                        cfg.params.eta_s, b)
    s_est, significance = analysis.bell_s(table, cfg.angles)
    summary = {
        "n_trials": cfg.n_trials,
        "seed": cfg.seed,
        "tau_w_ns": cfg.params.tau_w,
        "P_S": p_s.value, "P_S_sigma": p_s.sigma,
        "P_AS": p_as.value, "P_AS_sigma": p_as.sigma,
        "g2": g2.value, "g2_sigma": g2.sigma,
        "gamma": gamma.value, "gamma_sigma": gamma.sigma,
        "S": s_est.value, "S_sigma": s_est.sigma,
        "significance": significance,
    }
    return logs, summary


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    outdir = _resolve_outdir(args.out, cfg)
    if args.angles:
        try:
            ts, tas = (float(v) for v in args.angles.split(","))
        except ValueError:
            raise ConfigError(
                f"angles: expected 'theta_s,theta_as', got {args.angles!r}")
        log = run_campaign(cfg.params, ts, tas, cfg.mode, cfg.n_trials,
                           _campaign_seed(cfg.seed, 0))
        write_jsonl(log, outdir / f"events_{_angle_tag(ts, tas)}.jsonl")
        table = analysis.tally(log)
        p_s = analysis.singles_probability(table, "S", ts, tas)
        p_as = analysis.singles_probability(table, "AS", ts, tas)
        summary = {
            "n_trials": cfg.n_trials, "seed": cfg.seed,
            "theta_s": ts, "theta_as": tas,
            "P_S": p_s.value, "P_S_sigma": p_s.sigma,
            "P_AS": p_as.value, "P_AS_sigma": p_as.sigma,
        }
    else:
        logs, summary = _run_point(cfg)
        for (ts, tas), log in logs.items():
            write_jsonl(log, outdir / f"events_{_angle_tag(ts, tas)}.jsonl")
    (outdir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    print(json.dumps(summary, sort_keys=True, indent=2))
    return EXIT_OK


SWEEP_COLUMNS = ("tau_w_ns", "P_S", "P_AS", "g2", "g2_sigma", "gamma",
                 "gamma_sigma", "S", "S_sigma", "significance")


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    if cfg.sweep_param != "tau_w":
        raise ConfigError("sweep_param: sweep must be declared over tau_w")
    if not cfg.sweep_values:
        raise ConfigError("sweep_values: sweep list is empty")
    outdir = _resolve_outdir(args.out, cfg)
    rows = []
    for i, point_cfg in enumerate(cfg.sweep_configs()):
        _, summary = _run_point(point_cfg, seed_base=8 * i)
        rows.append({c: summary[c] for c in SWEEP_COLUMNS})
    csv_path = outdir / "sweep.csv"
    with csv_path.open("w", encoding="utf-8") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in SWEEP_COLUMNS) + "\n")
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if not args.no_plot:
        for p in plots.plot_sweep(rows, outdir / "sweep"):
            print(f"wrote {p}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    log = read_jsonl(args.log)
    table = analysis.tally(log)
    ts, tas = log.theta_s, log.theta_as
    p_s = analysis.singles_probability(table, "S", ts, tas)
    p_as = analysis.singles_probability(table, "AS", ts, tas)
    result = {
        "n_trials": log.n_trials, "theta_s": ts, "theta_as": tas,
        "P_S": p_s.value, "P_S_sigma": p_s.sigma,
        "P_AS": p_as.value, "P_AS_sigma": p_as.sigma,
    }
    if (ts, tas) == (0.0, 0.0):
        g2 = analysis.g2_estimate(table)
        b = model.background_b(log.params.tau_w, log.params.k_bg)
        gamma = analysis.retrieval_estimate(table, log.params.eta_as,
                                            log.params.eta_s, b)
        result.update(g2=g2.value, g2_sigma=g2.sigma,
                      gamma=gamma.value, gamma_sigma=gamma.sigma)
    else:
        e = analysis.correlation_e(table, ts, tas)
        result.update(E=e.value, E_sigma=e.sigma)
    text = json.dumps(result, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _read_points_csv(path: str | Path) -> list[SweepPoint]:
    points = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            parts = [p.strip() for p in stripped.split(",")]
            if lineno == 1:
                try:
                    float(parts[0])
                except ValueError:
                    continue        # header row
            try:
                if len(parts) == 2:
                    points.append(SweepPoint(float(parts[0]),
                                             float(parts[1])))
                elif len(parts) == 3:
                    points.append(SweepPoint(float(parts[0]), float(parts[1]),
                                             float(parts[2])))
                else:
                    raise ValueError(f"expected 2 or 3 columns, "
                                     f"got {len(parts)}")
            except (ValueError, ParameterError) as exc:
                raise DataParseError(f"line {lineno}: {exc}") from exc
    if not points:
        raise DataParseError("line 1: no data rows found")
    return points


FIT_MODELS = ("background", "decay", "g2", "s")


def _run_fit(name: str, points: list[SweepPoint], cfg: CampaignConfig,
             gamma_data: str | None) -> FitResult:
    if name == "background":
        return fitting.fit_background_slope(points)
    if name == "decay":
        return fitting.fit_memory_decay(points)
    if name == "g2":
        if gamma_data:
            lookup = fitting.gamma_lookup_from_points(
                _read_points_csv(gamma_data))
        else:
            base = cfg.params
            lookup = lambda tau: model.retrieval_gamma(
                dataclasses.replace(base, tau_w=tau))
        return fitting.fit_xi(points, lookup, cfg.params.chi,
                              cfg.params.k_bg, cfg.params.c_bg)
    return fitting.fit_v0(points)


def _fit_curve(name: str, result: FitResult, points, cfg, gamma_data):
    import numpy as np
    x = np.array([p.x for p in points])
    grid = np.linspace(x.min(), x.max(), 200)
    if name == "background":
        return grid, result["k"] * grid
    if name == "decay":
        return grid, result["gamma0"] * np.exp(-grid / result["tau_mem"])
    if name == "g2":
        if gamma_data:
            lookup = fitting.gamma_lookup_from_points(
                _read_points_csv(gamma_data))
        else:
            base = cfg.params
            lookup = lambda tau: model.retrieval_gamma(
                dataclasses.replace(base, tau_w=tau))
        y = [fitting._g2_of_tau(t, result["xi"], lookup, cfg.params.chi,
                                cfg.params.k_bg, cfg.params.c_bg)
             for t in grid]
        return grid, np.array(y)
    grid = np.linspace(max(1.0, x.min()), x.max(), 200)
    return grid, result["v0"] * model.TWO_SQRT_TWO * (grid - 1) / (grid + 1)


def cmd_fit(args) -> int:
    if args.model not in FIT_MODELS:
        raise ConfigError(f"model: unknown model {args.model!r} "
                          f"(expected one of {', '.join(FIT_MODELS)})")
    cfg = _load_cfg(args)
    points = _read_points_csv(args.data)
    result = _run_fit(args.model, points, cfg, args.gamma_data)
    payload = {
        "model": args.model,
        "parameters": dict(zip(result.names, result.values)),
        "sigmas": dict(zip(result.names, result.sigmas)),
        "rss": result.rss,
        "iterations": result.iterations,
        "converged": result.converged,
        "at_bound": result.at_bound,
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    outdir = _resolve_outdir(args.out, cfg)
    fit_path = outdir / f"fit_{args.model}.json"
    fit_path.write_text(text + "\n", encoding="utf-8")
    print(text)
    if not args.no_plot:
        import numpy as np
        x = np.array([p.x for p in points])
        y = np.array([p.y for p in points])
        sig = ([p.sigma_y for p in points]
               if all(p.sigma_y is not None for p in points) else None)
        gx, gy = _fit_curve(args.model, result, points, cfg, args.gamma_data)
        labels = {
            "background": ("tau_w [ns]", "background counts / pulse"),
            "decay": ("storage time [ns]", "retrieval efficiency"),
            "g2": ("tau_w [ns]", "g2"),
            "s": ("g2", "Bell parameter S"),
        }[args.model]
        p = plots.plot_fit(x, y, sig, gx, gy, labels[0], labels[1],
                           outdir / f"fit_{args.model}.png")
        print(f"wrote {p}")
    return EXIT_OK


def cmd_hist(args) -> int:
    log = read_jsonl(args.log)
    bins = histogram(log, args.detector, args.bin_ns)
    outdir = _resolve_outdir(args.out, CampaignConfig())
    csv_path = outdir / "hist.csv"
    with csv_path.open("w", encoding="utf-8") as fh:
        fh.write("bin_start_ns,count\n")
        for start, count in bins:
            fh.write(f"{_fmt(start)},{count}\n")
    print(f"wrote {csv_path} ({len(bins)} bins)")
    if not args.no_plot:
        p = plots.plot_histogram(bins, args.bin_ns, args.detector,
                                 outdir / "hist.png")
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlczsim",
        description="Simulate and analyze spin-wave-photon entanglement "
                    "experiments with tunable write-pulse duration.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", help="key = value configuration file")
            p.add_argument("--seed", type=int, help="override master seed")
            p.add_argument("--trials", type=int,
                           help="override trials per campaign")
        p.add_argument("--out", help="output directory "
                       f"(default: ${OUTDIR_ENV} or cwd)")

    p = sub.add_parser("simulate", help="run campaigns, write event logs")
    add_common(p)
    p.add_argument("--angles", help="single 'theta_s,theta_as' setting "
                   "(default: full CHSH set plus a 0,0 campaign)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep tau_w, write a CSV table")
    add_common(p)
    p.add_argument("--no-plot", action="store_true",
                   help="skip figure rendering")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="estimate observables from a log")
    p.add_argument("log", help="event log (JSON Lines)")
    add_common(p, needs_config=False)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="fit a calibration curve to sweep data")
    p.add_argument("--model", required=True,
                   help="one of: " + ", ".join(FIT_MODELS))
    p.add_argument("--data", required=True,
                   help="CSV of x,y[,sigma] rows")
    p.add_argument("--gamma-data",
                   help="CSV of tau_w,gamma for the g2 model lookup")
    p.add_argument("--no-plot", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("hist", help="bin a log's arrival times")
    p.add_argument("log", help="event log (JSON Lines)")
    p.add_argument("--bin-ns", type=float, default=10.0,
                   help="bin width in nanoseconds (default 10)")
    p.add_argument("--detector", choices=("S", "AS"), default="S")
    p.add_argument("--no-plot", action="store_true")
    add_common(p, needs_config=False)
    p.set_defaults(func=cmd_hist)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EventLogParseError, DataParseError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (analysis.InsufficientStatisticsError, FitError) as exc:
        print(f"statistics error: {exc}", file=sys.stderr)
        return EXIT_STATS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
