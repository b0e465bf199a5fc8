"""Command-line entry point: simulate, bench, and validate.

Configuration is a flat key=value text file with ``#`` comments; outputs
are CSV files plus a manifest written last as the completion marker.
Outputs are byte-identical across runs with equal seeds, except for
wall-clock timing columns.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .checks import run_validation
from .measurement import RssModel
from .planner import PlannerConfig, PlannerMode
from .rigidity import Vec2
from .simulate import ScenarioConfig, run_monte_carlo, timing_profile

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_BAD_CONFIG = 2
EXIT_BAD_OUTPUT = 3

DEFAULT_BENCH_COUNTS = list(range(10, 101, 10))
QUICK_BENCH_COUNTS = [10, 20, 30]


class ConfigError(ValueError):
    pass


def _parse_point(value: str) -> Vec2:
    parts = value.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 'x,y', got {value!r}")
    return Vec2(float(parts[0]), float(parts[1]))


def _parse_points(value: str) -> tuple[Vec2, ...]:
    return tuple(_parse_point(p) for p in value.split(";") if p.strip())


_FLOAT_KEYS = {
    "p0_dbm": ("model", "p0_dbm"),
    "ref_distance_m": ("model", "ref_distance_m"),
    "path_loss_exponent": ("model", "path_loss_exponent"),
    "sigma_db": ("model", "sigma_db"),
    "speed_mps": ("planner", "speed_mps"),
    "epoch_dt_s": ("planner", "epoch_dt_s"),
    "max_turn_deg": ("planner", "max_turn_deg"),
    "angle_step_deg": ("planner", "angle_step_deg"),
    "success_radius_m": ("scenario", "success_radius_m"),
}
_INT_KEYS = {
    "prune_capacity": ("planner", "prune_capacity"),
    "horizon": ("scenario", "horizon"),
    "runs": ("scenario", "runs"),
    "base_seed": ("scenario", "base_seed"),
}
_POINT_KEYS = {"target": ("scenario", "target_true")}
_POINTS_KEYS = {"uav_starts": ("scenario", "uav_starts")}
KNOWN_KEYS = set(_FLOAT_KEYS) | set(_INT_KEYS) | set(_POINT_KEYS) | set(_POINTS_KEYS)


def parse_config_text(text: str, source: str = "<config>") -> ScenarioConfig:
    """Build a ScenarioConfig from key=value lines; unknown keys and
    malformed values raise ConfigError naming the line."""
    model_kw: dict = {}
    planner_kw: dict = {}
    scenario_kw: dict = {}
    buckets = {"model": model_kw, "planner": planner_kw, "scenario": scenario_kw}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                bucket, field = _FLOAT_KEYS[key]
                buckets[bucket][field] = float(value)
            elif key in _INT_KEYS:
                bucket, field = _INT_KEYS[key]
                buckets[bucket][field] = int(value)
            elif key in _POINT_KEYS:
                bucket, field = _POINT_KEYS[key]
                buckets[bucket][field] = _parse_point(value)
            else:
                bucket, field = _POINTS_KEYS[key]
                buckets[bucket][field] = _parse_points(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
    try:
        return ScenarioConfig(model=RssModel(**model_kw),
                              planner=PlannerConfig(**planner_kw),
                              **scenario_kw)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path: Optional[str]) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(p.read_text(), source=str(path))


def serialize_config(cfg: ScenarioConfig) -> str:
    """Render a config that parses back to the same settings."""
    def fmt(v: float) -> str:
        return f"{v:.12g}"

    lines = [
        f"target = {fmt(cfg.target_true.x)},{fmt(cfg.target_true.y)}",
        "uav_starts = " + " ; ".join(f"{fmt(p.x)},{fmt(p.y)}" for p in cfg.uav_starts),
        f"p0_dbm = {fmt(cfg.model.p0_dbm)}",
        f"ref_distance_m = {fmt(cfg.model.ref_distance_m)}",
        f"path_loss_exponent = {fmt(cfg.model.path_loss_exponent)}",
        f"sigma_db = {fmt(cfg.model.sigma_db)}",
        f"speed_mps = {fmt(cfg.planner.speed_mps)}",
        f"epoch_dt_s = {fmt(cfg.planner.epoch_dt_s)}",
        f"max_turn_deg = {fmt(cfg.planner.max_turn_deg)}",
        f"angle_step_deg = {fmt(cfg.planner.angle_step_deg)}",
        f"prune_capacity = {cfg.planner.prune_capacity}",
        f"horizon = {cfg.horizon}",
        f"runs = {cfg.runs}",
        f"success_radius_m = {fmt(cfg.success_radius_m)}",
        f"base_seed = {cfg.base_seed}",
    ]
    return "\n".join(lines) + "\n"


def _fmt_cell(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt_cell(c) for c in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", newline="\n")


def _parse_modes(value: str) -> list[PlannerMode]:
    modes = []
    for name in value.split(","):
        name = name.strip().lower()
        if not name:
            continue
        try:
            modes.append(PlannerMode(name))
        except ValueError:
            raise ConfigError(f"unknown mode {name!r} (choose from full, r, rs, rsv)")
    if not modes:
        raise ConfigError("no modes given")
    return modes


def _prepare_output(path_str: str) -> Path:
    out = Path(path_str)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise PermissionError(f"output directory not writable: {out} ({exc})") from exc
    return out


def _apply_overrides(cfg: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    updates: dict = {}
    if args.seed is not None:
        updates["base_seed"] = args.seed
    if args.runs is not None:
        updates["runs"] = args.runs
    if args.horizon is not None:
        updates["horizon"] = args.horizon
    if getattr(args, "quick", False):
        updates.setdefault("runs", 4)
        updates.setdefault("horizon", 10)
    return replace(cfg, **updates) if updates else cfg


def _write_manifest(out: Path, cfg_source: str, modes: Sequence[PlannerMode],
                    seed: int, emitted: Sequence[Path]) -> None:
    lines = [
        f"config = {cfg_source}",
        "modes = " + ",".join(m.value for m in modes),
        f"base_seed = {seed}",
    ]
    lines.extend(f"file {p.name}" for p in emitted)
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", newline="\n")


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        modes = _parse_modes(args.modes)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        out = _prepare_output(args.output)
    except PermissionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_OUTPUT
    emitted: list[Path] = []
    try:
        for mode in modes:
            mode_cfg = replace(cfg, planner=replace(cfg.planner, mode=mode))
            report = run_monte_carlo(mode_cfg, keep_traces=args.traces)
            metrics_path = out / f"metrics_{mode.value}.csv"
            _write_csv(metrics_path,
                       ["epoch", "success_rate", "rmse_m", "mean_planning_time_s"],
                       [(int(e), float(s), float(r), float(t))
                        for e, s, r, t in zip(report.epochs, report.success_rate,
                                              report.rmse_m, report.mean_planning_time_s)])
            emitted.append(metrics_path)
            if args.traces and report.traces:
                for trace in report.traces:
                    trace_path = out / f"trace_{mode.value}_{trace.run_index}.csv"
                    header = ["epoch"]
                    for i in range(trace.uav_positions.shape[1]):
                        header += [f"uav{i}_x", f"uav{i}_y"]
                    header += ["est_x", "est_y", "error_m", "objective",
                               "planning_time_s", "pruned_count"]
                    rows = []
                    for e in range(len(trace.epochs)):
                        row: list = [int(trace.epochs[e])]
                        for i in range(trace.uav_positions.shape[1]):
                            row += [float(trace.uav_positions[e, i, 0]),
                                    float(trace.uav_positions[e, i, 1])]
                        row += [float(trace.estimates[e, 0]), float(trace.estimates[e, 1]),
                                float(trace.error_m[e]), float(trace.objective[e]),
                                float(trace.planning_time_s[e]), int(trace.pruned_count[e])]
                        rows.append(row)
                    _write_csv(trace_path, header, rows)
                    emitted.append(trace_path)
        _write_manifest(out, args.config or "<defaults>", modes, cfg.base_seed, emitted)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_OUTPUT
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        modes = _parse_modes(args.modes)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        out = _prepare_output(args.output)
    except PermissionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_OUTPUT
    counts = QUICK_BENCH_COUNTS if args.quick else DEFAULT_BENCH_COUNTS
    if args.quick and args.runs is None:
        cfg = replace(cfg, runs=2)
    rows = timing_profile(cfg, counts, modes=modes)
    try:
        timing_path = out / "timing.csv"
        _write_csv(timing_path, ["mode", "measurement_count", "mean_planning_time_s"],
                   [(r.mode, r.measurement_count, r.mean_planning_time_s) for r in rows])
        _write_manifest(out, args.config or "<defaults>", modes, cfg.base_seed, [timing_path])
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_OUTPUT
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    results = run_validation(quick=args.quick)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED_CHECKS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rigid-planner",
        description="UAV waypoint planning simulations driven by the rigidity objective")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file (defaults used when omitted)")
        p.add_argument("--modes", default="full,r,rs,rsv",
                       help="comma-separated planner modes (full, r, rs, rsv)")
        p.add_argument("--seed", type=int, help="override base_seed")
        p.add_argument("--runs", type=int, help="override Monte Carlo run count")
        p.add_argument("--horizon", type=int, help="override episode length in epochs")
        p.add_argument("--output", default="out", help="output directory")
        p.add_argument("--quick", action="store_true", help="small smoke-test scale")

    sim = sub.add_parser("simulate", help="Monte Carlo localization metrics per mode")
    common(sim)
    sim.add_argument("--traces", action="store_true", help="also write per-run trace CSVs")
    sim.set_defaults(func=cmd_simulate)

    bench = sub.add_parser("bench", help="planning-time profile vs accumulated measurements")
    common(bench)
    bench.set_defaults(func=cmd_bench)

    val = sub.add_parser("validate", help="run the fast numerical property suite")
    val.add_argument("--quick", action="store_true", help="smaller sample counts")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())
