"""Episode report serialization and file export.

metrics.json carries the full deterministic report (wall-clock timings go to
timings.csv instead so repeated runs at the same seed stay byte-identical).
Clouds and trajectories export as ascii PLY viewable in standard viewers.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .episode import EpisodeReport, StepRecord
from .geometry import Pose
from .meshio import write_ply_cloud, write_ply_polylines


def _pose_to_dict(pose: Pose) -> dict:
    return {"position": list(map(float, pose.position)), "facing": list(map(float, pose.facing))}


def _pose_from_dict(d: dict) -> Pose:
    return Pose(np.asarray(d["position"]), np.asarray(d["facing"]))


def report_to_dict(report: EpisodeReport) -> dict:
    """JSON-ready form of a report (bulk clouds and timings excluded)."""
    return {
        "scene": report.scene_name,
        "planner": report.planner,
        "team_size": report.team_size,
        "predictor": report.predictor,
        "seed": report.seed,
        "settings": report.settings,
        "points_per_step": list(report.points_per_step),
        "distances_per_step": [list(row) for row in report.distances_per_step],
        "steps": [
            {
                "poses": [_pose_to_dict(p) for p in s.poses],
                "joint_gain": s.joint_gain,
                "total_effort": s.total_effort,
                "candidate_indices": list(s.candidate_indices),
                "threshold_fallbacks": list(s.threshold_fallbacks),
            }
            for s in report.steps
        ],
        "termination": report.termination,
        "trajectories": [[_pose_to_dict(p) for p in traj] for traj in report.trajectories],
    }


def report_from_dict(data: dict) -> EpisodeReport:
    report = EpisodeReport(
        scene_name=data["scene"],
        planner=data["planner"],
        team_size=data["team_size"],
        predictor=data["predictor"],
        seed=data["seed"],
        settings=data["settings"],
        points_per_step=list(data["points_per_step"]),
        distances_per_step=[list(r) for r in data["distances_per_step"]],
        termination=data["termination"],
    )
    report.steps = [
        StepRecord(
            poses=[_pose_from_dict(p) for p in s["poses"]],
            joint_gain=s["joint_gain"],
            total_effort=s["total_effort"],
            candidate_indices=tuple(s["candidate_indices"]),
            threshold_fallbacks=list(s["threshold_fallbacks"]),
        )
        for s in data["steps"]
    ]
    report.trajectories = [[_pose_from_dict(p) for p in traj] for traj in data["trajectories"]]
    return report


def export_report(report: EpisodeReport, out_dir) -> list[str]:
    """Write metrics.json, step/plot CSVs, per-step clouds, and trajectories.

    Returns the written paths. Everything except timings.csv is byte-stable
    for a fixed seed.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    metrics_path = out_dir / "metrics.json"
    metrics_path.write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")
    written.append(str(metrics_path))

    n_agents = report.team_size
    steps_path = out_dir / "steps.csv"
    header = "t,points," + ",".join(f"dist_agent_{i}" for i in range(n_agents))
    rows = [header]
    for t, points in enumerate(report.points_per_step):
        dists = report.distances_per_step[t] if t < len(report.distances_per_step) else []
        rows.append(f"{t},{points}," + ",".join(f"{d:.8f}" for d in dists))
    steps_path.write_text("\n".join(rows) + "\n")
    written.append(str(steps_path))

    plot_path = out_dir / "plot_data.csv"
    rows = ["t,points,total_distance"]
    for t, points in enumerate(report.points_per_step):
        total = sum(report.distances_per_step[t]) if t < len(report.distances_per_step) else 0.0
        rows.append(f"{t},{points},{total:.8f}")
    plot_path.write_text("\n".join(rows) + "\n")
    written.append(str(plot_path))

    timings_path = out_dir / "timings.csv"
    rows = ["t,seconds"] + [f"{t},{s:.6f}" for t, s in enumerate(report.step_seconds)]
    timings_path.write_text("\n".join(rows) + "\n")
    written.append(str(timings_path))

    if report.clouds:
        clouds_dir = out_dir / "clouds"
        clouds_dir.mkdir(exist_ok=True)
        for t, cloud in enumerate(report.clouds):
            path = clouds_dir / f"step_{t:03d}.ply"
            write_ply_cloud(path, cloud)
            written.append(str(path))

    if report.trajectories:
        traj_path = out_dir / "trajectories.ply"
        polylines = [
            np.asarray([p.position for p in traj]).reshape(-1, 3) for traj in report.trajectories
        ]
        write_ply_polylines(traj_path, polylines)
        written.append(str(traj_path))

    return written
