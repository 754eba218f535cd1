"""Run configuration files: TOML (default) or JSON, schema-checked.

Unknown sections or keys are rejected outright so typos fail fast instead of
silently falling back to defaults.
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .candidates import CandidateConfig
from .errors import ConfigError
from .scenes import BUNDLED_SCENES, DEFAULT_SURFACE_POINTS, build_scene, bundled_scene
from .meshio import load_mesh
from .visibility import SensorModel

# section -> key -> (type or tuple of types)
_SCHEMA = {
    "run": {
        "scene": str,
        "planner": str,
        "team_size": int,
        "predictor": (str, dict),
        "seed": int,
        "max_steps": int,
        "stopping_ratio": float,
    },
    "suite": {
        "scenes": list,
        "planners": list,
        "seeds": list,
        "team_size": int,
        "predictor": (str, dict),
        "max_steps": int,
        "stopping_ratio": float,
    },
    "scene": {
        "surface_points": int,
        "sample_seed": int,
        "bounds_scale": float,
    },
    "sensor": {
        "horizontal_fov": float,
        "vertical_fov": float,
        "min_range": float,
        "max_range": float,
    },
    "planner": {
        "tau": float,
        "hpr_exponent": float,
        "dedup_resolution": float,
        "baseline_distance_threshold": float,
        "max_team_size": int,
        "standoff_scale": float,
        "object_proximity": float,
    },
    "rrt": {
        "step_size": float,
        "max_iterations": int,
        "goal_tolerance": float,
        "seed": int,
    },
    "candidates": {
        "mid_radius_scale": float,
        "outer_radius_scale": float,
        "height_offset_scale": float,
        "angular_step": float,
    },
    "predictor": {
        "command": str,
    },
}

_PLANNER_CHOICES = ("map_nbv", "pred_nbv", "frontier_multi")
_PREDICTOR_CHOICES = ("oracle", "passthrough", "mirror_symmetry")


@dataclass
class RunConfig:
    """Validated contents of a configuration file."""

    path: Path
    run: dict = field(default_factory=dict)
    suite: dict = field(default_factory=dict)
    scene_opts: dict = field(default_factory=dict)
    sensor: SensorModel = field(default_factory=SensorModel)
    candidate_cfg: CandidateConfig = field(default_factory=CandidateConfig)
    planner_overrides: dict = field(default_factory=dict)
    rrt_overrides: dict = field(default_factory=dict)
    predictor_command: str | None = None


def _check_section(name: str, section, path) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: section [{name}] must be a table/object")
    allowed = _SCHEMA[name]
    out = {}
    for key, value in section.items():
        if key not in allowed:
            raise ConfigError(f"{path}: unknown key '{key}' in section [{name}]")
        expected = allowed[key]
        expected_tuple = expected if isinstance(expected, tuple) else (expected,)
        if float in expected_tuple and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, expected_tuple) or isinstance(value, bool):
            names = "/".join(t.__name__ for t in expected_tuple)
            raise ConfigError(f"{path}: key '{key}' in [{name}] must be {names}")
        out[key] = value
    return out


def load_config(path) -> RunConfig:
    """Parse and validate a .toml or .json run configuration."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such config file")
    try:
        if path.suffix.lower() == ".json":
            raw = json.loads(path.read_text())
        else:
            raw = tomllib.loads(path.read_text())
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a table/object")

    for section in raw:
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")

    sections = {name: _check_section(name, raw.get(name, {}), path) for name in _SCHEMA}

    for holder in ("run", "suite"):
        planners = sections[holder].get("planners", [])
        single = sections[holder].get("planner")
        for planner in list(planners) + ([single] if single else []):
            if planner not in _PLANNER_CHOICES:
                raise ConfigError(f"{path}: unknown planner '{planner}'")
        predictor = sections[holder].get("predictor")
        if isinstance(predictor, str) and predictor not in _PREDICTOR_CHOICES:
            raise ConfigError(f"{path}: unknown predictor '{predictor}'")
        if isinstance(predictor, dict) and set(predictor) != {"command"}:
            raise ConfigError(f"{path}: predictor table must have exactly a 'command' key")

    try:
        sensor = SensorModel(**sections["sensor"])
        candidate_cfg = CandidateConfig(**sections["candidates"])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    return RunConfig(
        path=path,
        run=sections["run"],
        suite=sections["suite"],
        scene_opts=sections["scene"],
        sensor=sensor,
        candidate_cfg=candidate_cfg,
        planner_overrides=sections["planner"],
        rrt_overrides=sections["rrt"],
        predictor_command=sections["predictor"].get("command"),
    )


def resolve_scene(spec: str, cfg: RunConfig):
    """Turn a scene spec into (name, Scene).

    ``bundled:<name>`` uses a procedural mesh; anything else is a mesh path
    relative to the config file.
    """
    points = cfg.scene_opts.get("surface_points", DEFAULT_SURFACE_POINTS)
    seed = cfg.scene_opts.get("sample_seed", 0)
    bounds_scale = cfg.scene_opts.get("bounds_scale", 4.0)
    if spec.startswith("bundled:"):
        name = spec.split(":", 1)[1]
        if name not in BUNDLED_SCENES:
            raise ConfigError(f"{cfg.path}: unknown bundled scene '{name}'")
        scene = build_scene(
            BUNDLED_SCENES[name](), name=name, surface_points=points, seed=seed,
            bounds_scale=bounds_scale,
        )
        return name, scene
    mesh_path = (cfg.path.parent / spec).resolve()
    triangles = load_mesh(mesh_path)
    name = mesh_path.stem
    return name, build_scene(
        triangles, name=name, surface_points=points, seed=seed, bounds_scale=bounds_scale
    )


def resolve_predictor(cfg: RunConfig, table: dict):
    """Predictor spec for an episode: a kind string or {'command': ...}."""
    if cfg.predictor_command:
        return {"command": cfg.predictor_command}
    return table.get("predictor", "mirror_symmetry")
