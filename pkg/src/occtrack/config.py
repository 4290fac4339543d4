"""Flat ``key = value`` configuration files.

Every field of :class:`TrackerConfig`, :class:`OcclusionConfig`,
:class:`SifpConfig`, :class:`ScenarioConfig` and :class:`EvalConfig` has one
key. ``n_keypoints`` and ``reid_dim`` are shared by the tracker and the
simulator. Lists are comma separated; ``#`` starts a comment. Later sources
override earlier ones, so CLI flags are applied after the file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError
from .metrics import EvalConfig
from .occlusion import OcclusionConfig
from .sifp import SifpConfig
from .simulator import ScenarioConfig
from .tracker import TrackerConfig


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _head(text):
    if text.strip().lower() in ("none", ""):
        return None
    a, b = (int(v) for v in text.split(","))
    return (a, b)


# key -> (section, field, parser)
KEYS = {
    "theta_pos": ("tracker", "theta_pos", float),
    "sigma_max": ("tracker", "sigma_max", float),
    "mode": ("tracker", "mode", str),
    "cost_gate": ("tracker", "cost_gate", float),
    "max_age": ("tracker", "max_age", int),
    "min_score": ("tracker", "min_score", float),
    "assignment": ("tracker", "assignment", str),
    "appearance_blend": ("tracker", "appearance_blend", float),
    "gamma_valid": ("occlusion", "gamma_valid", float),
    "theta_valid": ("occlusion", "theta_valid", int),
    "omegas": ("sifp", "omegas", _floats),
    "s_lower": ("sifp", "s_lower", float),
    "s_upper": ("sifp", "s_upper", float),
    "fpn_areas": ("sifp", "fpn_areas", _floats),
    "oversize": ("sifp", "oversize", str),
    "seed": ("scenario", "seed", int),
    "n_persons": ("scenario", "n_persons", int),
    "n_frames": ("scenario", "n_frames", int),
    "arena_w": ("scenario", "arena_w", float),
    "arena_h": ("scenario", "arena_h", float),
    "speed_min": ("scenario", "speed_min", float),
    "speed_max": ("scenario", "speed_max", float),
    "layout": ("scenario", "layout", str),
    "height_min": ("scenario", "height_min", float),
    "height_max": ("scenario", "height_max", float),
    "aspect": ("scenario", "aspect", float),
    "box_jitter": ("scenario", "box_jitter", float),
    "keypoint_jitter": ("scenario", "keypoint_jitter", float),
    "visible_confidence_min": ("scenario", "visible_confidence_min", float),
    "occlusion_iou_threshold": ("scenario", "occlusion_iou_threshold", float),
    "reid_noise_sigma": ("scenario", "reid_noise_sigma", float),
    "occluded_confidence_ceiling": ("scenario", "occluded_confidence_ceiling", float),
    "occluded_feature_blend": ("scenario", "occluded_feature_blend", float),
    "detector_fp_rate": ("scenario", "detector_fp_rate", float),
    "detector_fn_rate": ("scenario", "detector_fn_rate", float),
    "sequence": ("scenario", "sequence", str),
    "eval_threshold": ("eval", "threshold", float),
    "pckh_ratio": ("eval", "pckh_ratio", float),
    "head_joints": ("eval", "head_joints", _head),
    "box_ratio": ("eval", "box_ratio", float),
    # shared
    "n_keypoints": ("shared", "n_keypoints", int),
    "reid_dim": ("shared", "reid_dim", int),
}


@dataclass(frozen=True)
class Settings:
    tracker: TrackerConfig
    sifp: SifpConfig
    scenario: ScenarioConfig
    eval: EvalConfig


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        values[key] = value
    return values


def load_file(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read(), str(path))


def build(values: dict[str, str]) -> Settings:
    """Turn raw ``key -> text`` pairs into validated config objects."""
    sections: dict[str, dict] = {s: {} for s in ("tracker", "occlusion", "sifp", "scenario", "eval", "shared")}
    for key, text in values.items():
        if key not in KEYS:
            raise ConfigError(f"unknown key '{key}'")
        section, name, parse = KEYS[key]
        try:
            sections[section][name] = parse(text) if isinstance(text, str) else text
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for '{key}': {text!r} ({e})") from None
    shared = sections["shared"]
    occ = OcclusionConfig(**sections["occlusion"], **({"n_keypoints": shared["n_keypoints"]} if "n_keypoints" in shared else {}))
    tracker_kw = dict(sections["tracker"])
    if "reid_dim" in shared:
        tracker_kw["reid_dim"] = shared["reid_dim"]
    scenario_kw = dict(sections["scenario"])
    scenario_kw.update(shared)
    return Settings(
        TrackerConfig(occlusion=occ, **tracker_kw),
        SifpConfig(**sections["sifp"]),
        ScenarioConfig(**scenario_kw),
        EvalConfig(**sections["eval"]),
    )


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if value is None:
        return "none"
    if hasattr(value, "value"):
        return str(value.value)
    return repr(value) if isinstance(value, float) else str(value)


def dump(settings: Settings) -> str:
    """Render every key with its current value."""
    objs = {
        "tracker": settings.tracker,
        "occlusion": settings.tracker.occlusion,
        "sifp": settings.sifp,
        "scenario": settings.scenario,
        "eval": settings.eval,
    }
    lines = []
    for key, (section, name, _) in KEYS.items():
        if section == "shared":
            obj = settings.tracker.occlusion if name == "n_keypoints" else settings.tracker
        else:
            obj = objs[section]
        lines.append(f"{key} = {_format(getattr(obj, name))}")
    return "\n".join(lines) + "\n"


def field_names() -> set[str]:
    """All dataclass field names that must be reachable from a key."""
    names = set()
    for cls in (TrackerConfig, OcclusionConfig, SifpConfig, ScenarioConfig, EvalConfig):
        names |= {f.name for f in dataclasses.fields(cls) if f.name != "occlusion"}
    return names
