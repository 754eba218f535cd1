"""Command line entry points: run, suite, tables, gen-scenes."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config, resolve_predictor, resolve_scene
from .episode import EpisodeConfig, derive_seed, run_episode
from .errors import MapNbvError
from .metrics import format_tables, improvement, reproduce_tables
from .reporting import export_report
from .scenes import generate_scene_meshes

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALL_STUCK = 3


def _episode_config(cfg, scene, table, planner, team_size, seed) -> EpisodeConfig:
    return EpisodeConfig(
        scene=scene,
        planner=planner,
        team_size=team_size,
        predictor=resolve_predictor(cfg, table),
        sensor=cfg.sensor,
        candidate_cfg=cfg.candidate_cfg,
        stopping_ratio=table.get("stopping_ratio", 0.95),
        max_steps=table.get("max_steps", 30),
        seed=seed,
        planner_overrides=dict(cfg.planner_overrides),
        rrt_overrides=dict(cfg.rrt_overrides),
    )


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    table = cfg.run
    if "scene" not in table:
        raise ConfigError(f"{cfg.path}: [run] needs a 'scene' key")
    planner = table.get("planner", "map_nbv")
    team_size = 1 if planner == "pred_nbv" else table.get("team_size", 2)
    seed = args.seed if args.seed is not None else table.get("seed", 0)
    name, scene = resolve_scene(table["scene"], cfg)
    episode = _episode_config(cfg, scene, table, planner, team_size, seed)
    report = run_episode(episode)
    export_report(report, args.out)
    print(
        f"{name} [{planner}, n={team_size}, seed={seed}]: "
        f"{report.final_points} unique points, {report.total_distance:.2f} m flown, "
        f"terminated: {report.termination} "
        f"({len(report.points_per_step) - 1} steps)"
    )
    print(f"exports written to {args.out}")
    return EXIT_ALL_STUCK if report.termination == "planner_stuck" else EXIT_OK


def cmd_suite(args) -> int:
    cfg = load_config(args.config)
    table = cfg.suite
    scene_specs = table.get("scenes")
    if not scene_specs:
        raise ConfigError(f"{cfg.path}: [suite] needs a non-empty 'scenes' list")
    planners = table.get("planners", ["map_nbv", "frontier_multi"])
    seeds = table.get("seeds", [0])
    team_size = table.get("team_size", 2)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    terminations = []
    for spec in scene_specs:
        name, scene = resolve_scene(spec, cfg)
        for planner in planners:
            n = 1 if planner == "pred_nbv" else team_size
            for master in seeds:
                seed = derive_seed(master, name, planner)
                cell_name = f"{name}__{planner}__seed{master}"
                episode = _episode_config(cfg, scene, table, planner, n, seed)
                try:
                    report = run_episode(episode)
                except MapNbvError as exc:
                    print(f"{cell_name}: ERROR {exc}", file=sys.stderr)
                    results[(name, planner, master)] = None
                    continue
                export_report(report, out_dir / cell_name)
                terminations.append(report.termination)
                results[(name, planner, master)] = report
                print(
                    f"{cell_name}: {report.final_points} points, "
                    f"{report.total_distance:.2f} m, {report.termination}"
                )

    _write_suite_summary(out_dir, results, scene_specs, planners, seeds, cfg)
    if terminations and all(t == "planner_stuck" for t in terminations):
        return EXIT_ALL_STUCK
    return EXIT_OK


def _write_suite_summary(out_dir, results, scene_specs, planners, seeds, cfg) -> None:
    lines = []
    header = ["scene", "seed"]
    for planner in planners:
        header += [f"points_{planner}", f"distance_{planner}"]
    for other in planners[1:]:
        header.append(f"improvement_{planners[0]}_vs_{other}")
    lines.append(",".join(header))
    for spec in scene_specs:
        name = spec.split(":", 1)[1] if spec.startswith("bundled:") else Path(spec).stem
        for master in seeds:
            row = [name, str(master)]
            reports = {p: results.get((name, p, master)) for p in planners}
            for planner in planners:
                rep = reports[planner]
                if rep is None:
                    row += ["", ""]
                else:
                    row += [str(rep.final_points), f"{rep.total_distance:.4f}"]
            for other in planners[1:]:
                a, b = reports[planners[0]], reports[other]
                if a is None or b is None or a.final_points + b.final_points == 0:
                    row.append("")
                else:
                    row.append(f"{improvement(a.final_points, b.final_points):.2f}")
            lines.append(",".join(row))
    (Path(out_dir) / "summary.csv").write_text("\n".join(lines) + "\n")


def cmd_tables(args) -> int:
    checks = reproduce_tables()
    print(format_tables(checks))
    return EXIT_OK


def cmd_gen_scenes(args) -> int:
    written = generate_scene_meshes(args.out)
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapnbv",
        description="Multi-agent prediction-guided next-best-view planning simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one reconstruction episode")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_suite = sub.add_parser("suite", help="run a scenes x planners comparison matrix")
    p_suite.add_argument("--config", required=True)
    p_suite.add_argument("--out", required=True)
    p_suite.set_defaults(func=cmd_suite)

    p_tables = sub.add_parser("tables", help="recompute the bundled comparison tables")
    p_tables.set_defaults(func=cmd_tables)

    p_gen = sub.add_parser("gen-scenes", help="write the bundled procedural meshes")
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen_scenes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MapNbvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
