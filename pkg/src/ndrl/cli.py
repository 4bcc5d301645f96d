"""``ndrl`` command line: calibrate, train, baseline, evaluate, compare, export-fixtures.

Exit codes: 0 success, 2 usage error, 3 runtime or data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .child_agent import DivergenceError
from .config import ConfigError, RunConfig, dump_config, load_config, tomllib
from .crop_env.calibration import (
    DEFAULT_GRID,
    calibrate,
    default_weather_by_year,
    load_treatments,
    read_schedule,
    write_schedule,
)
from .crop_env.model import SimulationError, SoilParams, run_season
from .crop_env.weather import (
    DEFAULT_WEATHER_SEED,
    PROFILES,
    WeatherError,
    generate_weather,
    load_weather,
    write_weather,
)
from .metrics import MetricError, MetricsRow, d_index, nrmse, r_squared
from .trainer import evaluate_schedule, read_training_log, run_flat_dqn, run_ndrl, write_run

log = logging.getLogger("ndrl")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
TABLE_HEADER = ("Category", "Year", "Methods", "Irrigation", "Fertilizer_N", "Yields", "IWP", "NPFP")
CATEGORY = "Water-Nitrogen Management"

# flag name -> RunConfig key
_OVERRIDES = {
    "episodes": "episodes",
    "profile": "year_profile",
    "params": "params_file",
    "weather": "weather_file",
    "eta": "eta",
    "alpha_mix": "alpha_mix",
    "delta": "delta",
    "parent_step": "parent_step",
}


def default_out_root() -> Path:
    return Path(os.environ.get("NDRL_OUT", "runs"))


def parse_seeds(text: str) -> list[int]:
    """``1..5`` or ``1,3,7``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            seeds = list(range(int(lo), int(hi) + 1))
        else:
            seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ndrl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ndrl {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    c = sub.add_parser("calibrate", help="grid-search surrogate parameters against field treatments")
    c.add_argument("--fixtures", help="treatment CSV (default: shipped 2023/2024 fixture)")
    c.add_argument("--grid", help="TOML file mapping SoilParams fields to value lists")
    c.add_argument("--out", help="output directory")

    for name, helptext in (("train", "train the nested dual-agent learner"),
                           ("baseline", "train the flat DQN baseline")):
        t = sub.add_parser(name, help=helptext)
        t.add_argument("--config", required=True, help="flat TOML run config")
        seeds = t.add_mutually_exclusive_group()
        seeds.add_argument("--seed", type=int)
        seeds.add_argument("--seeds", type=parse_seeds, help="e.g. 1..5 or 1,2,3")
        t.add_argument("--out", help="output directory")
        t.add_argument("--episodes", type=int)
        t.add_argument("--profile", choices=sorted(PROFILES))
        t.add_argument("--params", help="SoilParams JSON from `calibrate`")
        t.add_argument("--weather", help="weather CSV")
        t.add_argument("--eta", type=float)
        t.add_argument("--alpha-mix", type=float)
        t.add_argument("--delta", type=float)
        t.add_argument("--parent-step", type=float)
        t.add_argument("--jobs", type=int, default=None, help="parallel runs for --seeds")

    e = sub.add_parser("evaluate", help="simulate a fixed 12-event schedule")
    e.add_argument("--schedule", required=True)
    e.add_argument("--profile", choices=sorted(PROFILES), default="dry2023")
    e.add_argument("--params")
    e.add_argument("--weather")
    e.add_argument("--label", default="schedule")
    e.add_argument("--out")

    m = sub.add_parser("compare", help="field data vs learned schedules in the comparison-table layout")
    m.add_argument("--ndrl", required=True, help="NDRL run directory or training_log.csv")
    m.add_argument("--dqn", required=True, help="DQN run directory or training_log.csv")
    m.add_argument("--field", help="treatment CSV (default: shipped fixture)")
    m.add_argument("--profile", choices=sorted(PROFILES))
    m.add_argument("--out", required=True)

    x = sub.add_parser("export-fixtures", help="write fixtures, weather, control schedules and defaults")
    x.add_argument("--out", required=True)
    return p


# -- commands ---------------------------------------------------------------

def _load_grid(path: str | None) -> dict:
    if path is None:
        return DEFAULT_GRID
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"grid file not found: {p}")
    data = tomllib.loads(p.read_text(encoding="utf-8"))
    if not data or any(len(v) == 0 for v in data.values()):
        raise ConfigError(f"{p}: empty parameter grid")
    return {k: [tuple(x) if isinstance(x, list) else x for x in v] for k, v in data.items()}


def cmd_calibrate(args) -> int:
    treatments = load_treatments(args.fixtures)
    weather = default_weather_by_year()
    result = calibrate(_load_grid(args.grid), [(t.schedule, t.observed_yield) for t in treatments], weather)
    out = Path(args.out) if args.out else default_out_root() / "calibration"
    out.mkdir(parents=True, exist_ok=True)
    (out / "params.json").write_text(json.dumps(result.params.to_dict(), indent=2) + "\n", encoding="utf-8")
    obs, sim = list(result.observed), list(result.simulated)
    report = {
        "grid_points": result.evaluated,
        "nrmse_percent": result.nrmse,
        "d_index": d_index(obs, sim),
        "r_squared": r_squared(obs, sim),
        "by_year": {},
        "treatments": [
            {"treatment": t.name, "observed": o, "simulated": s}
            for t, o, s in zip(treatments, obs, sim)
        ],
    }
    for year in sorted({t.year for t in treatments}):
        idx = [i for i, t in enumerate(treatments) if t.year == year]
        report["by_year"][str(year)] = {"nrmse_percent": nrmse([obs[i] for i in idx], [sim[i] for i in idx])}
    (out / "calibration_report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(f"nRMSE {result.nrmse:.2f}% over {len(treatments)} treatments -> {out}")
    return EXIT_OK


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides = {}
    for flag, key in _OVERRIDES.items():
        val = getattr(args, flag, None)
        if val is not None:
            overrides[key] = val
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        return cfg.with_overrides(**overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _train_one(method: str, cfg: RunConfig, out: Path) -> dict:
    log_ = run_ndrl(cfg) if method == "train" else run_flat_dqn(cfg)
    write_run(log_, cfg, out)
    best = log_.best_schedule
    return {
        "seed": cfg.seed,
        "out": str(out),
        "best_yield": log_.best_yield,
        "best_irrigation": best.total_irrigation if best else None,
        "best_nitrogen": best.total_nitrogen if best else None,
    }


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    tag = "ndrl" if args.command == "train" else "dqn"
    root = Path(args.out) if args.out else default_out_root() / tag
    if args.seeds is None:
        out = root if args.out else root / f"seed{cfg.seed}"
        summary = _train_one(args.command, cfg, out)
        print(json.dumps(summary))
        return EXIT_OK
    jobs = [(args.command, cfg.with_overrides(seed=s), root / f"seed{s}") for s in args.seeds]
    workers = args.jobs or min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_train_one, *zip(*jobs)))
    else:
        results = [_train_one(*j) for j in jobs]
    root.mkdir(parents=True, exist_ok=True)
    (root / "summary.json").write_text(json.dumps({"method": tag, "runs": results}, indent=2) + "\n",
                                       encoding="utf-8")
    for r in results:
        print(json.dumps(r))
    return EXIT_OK


def _weather_for(profile: str, path: str | None):
    if path:
        return load_weather(path)
    return generate_weather(DEFAULT_WEATHER_SEED[profile], profile)


def _params_from(path: str | None) -> SoilParams:
    if not path:
        return SoilParams()
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"params file not found: {p}")
    return SoilParams.from_dict(json.loads(p.read_text(encoding="utf-8")))


def _row_dict(row: MetricsRow) -> dict:
    return {
        "label": row.label,
        "irrigation": row.irrigation,
        "fertilizer_n": row.fertilizer_n,
        "yield": row.yield_kgha,
        "iwp": row.iwp,
        "npfp": row.npfp,
    }


def cmd_evaluate(args) -> int:
    schedule = read_schedule(args.schedule)
    result, row = evaluate_schedule(
        schedule, args.profile, _params_from(args.params), _weather_for(args.profile, args.weather), args.label
    )
    payload = _row_dict(row)
    payload["event_log"] = [vars(e) for e in result.event_log]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(_row_dict(row)))
    return EXIT_OK


def _log_path(path: str) -> Path:
    p = Path(path)
    return p / "training_log.csv" if p.is_dir() else p


def best_feasible(rows: list[dict]) -> dict | None:
    best = None
    for r in rows:
        if not r["violated"] and (best is None or r["yield"] > best["yield"]):
            best = r
    return best


def _run_profile(path: Path, fallback: str | None) -> str:
    meta = path.parent / "run_meta.json"
    if meta.exists():
        return json.loads(meta.read_text(encoding="utf-8"))["config"]["year_profile"]
    if fallback is None:
        raise ConfigError(f"{path}: no run_meta.json; pass --profile")
    return fallback


def comparison_rows(ndrl_log: Path, dqn_log: Path, field_csv: str | None, profile: str | None) -> list[dict]:
    runs = {}
    for method, path in (("DQN", dqn_log), ("NDRL", ndrl_log)):
        if not path.exists():
            raise FileNotFoundError(f"training log not found: {path}")
        runs[method] = (_run_profile(path, profile), best_feasible(read_training_log(path)))
    treatments = load_treatments(field_csv)
    years = sorted({PROFILES[p].year for p, _ in runs.values()})
    rows = []
    for year in years:
        control = [t for t in treatments if t.year == year and t.name.startswith("Tr0")]
        for t in control:
            r = MetricsRow.build("Field Data", t.schedule.total_irrigation, t.schedule.total_nitrogen,
                                 t.observed_yield)
            rows.append({"Year": year, "row": r})
        for method, (prof, best) in runs.items():
            if PROFILES[prof].year != year or best is None:
                continue
            r = MetricsRow.build(method, best["total_i"], best["total_n"], best["yield"])
            rows.append({"Year": year, "row": r})
    return rows


def cmd_compare(args) -> int:
    rows = comparison_rows(_log_path(args.ndrl), _log_path(args.dqn), args.field, args.profile)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "comparison_table.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for item in rows:
            r = item["row"]
            w.writerow([CATEGORY, item["Year"], r.label, f"{r.irrigation:g}", f"{r.fertilizer_n:g}",
                        f"{r.yield_kgha:.1f}", f"{r.iwp:.4f}", f"{r.npfp:.4f}"])
    metrics = [{"year": item["Year"], **_row_dict(item["row"])} for item in rows]
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} rows -> {out / 'comparison_table.csv'}")
    return EXIT_OK


def cmd_export_fixtures(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    treatments = load_treatments()
    with (out / "field_treatments.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["treatment", "date", "irrigation_mm", "nitrogen_kgha", "yield_kgha"])
        for t in treatments:
            for d, i, n in zip(t.schedule.dates, t.schedule.irrigation, t.schedule.nitrogen):
                w.writerow([t.name, d, f"{i:g}", f"{n:g}", f"{t.observed_yield:g}"])
    for name in PROFILES:
        write_weather(generate_weather(DEFAULT_WEATHER_SEED[name], name), out / f"weather_{name}.csv")
    for t in treatments:
        write_schedule(t.schedule, out / f"schedule_{t.name}.csv")
    (out / "default_config.toml").write_text(dump_config(RunConfig()), encoding="utf-8")
    (out / "default_params.json").write_text(json.dumps(SoilParams().to_dict(), indent=2) + "\n",
                                             encoding="utf-8")
    print(f"fixtures written to {out}")
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "train": cmd_train,
    "baseline": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "export-fixtures": cmd_export_fixtures,
}


def parse_args(argv=None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, WeatherError, SimulationError, MetricError, DivergenceError,
            FileNotFoundError, ValueError, KeyError) as exc:
        print(f"ndrl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
