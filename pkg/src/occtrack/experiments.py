"""Mode ablation and throughput benchmark drivers."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from .metrics import EvalConfig, MotReport, evaluate
from .simulator import ScenarioConfig, generate
from .tracker import Mode, Tracker, TrackerConfig, track_frames

MODES = (Mode.IOU_ONLY, Mode.REID_ALWAYS, Mode.OCCLUSION_AWARE)


@dataclass
class AblationRow:
    mode: Mode
    fp: int = 0
    fn: int = 0
    ids: int = 0
    gt_count: int = 0
    reports: list[MotReport] = field(default_factory=list)

    @property
    def mota(self) -> float:
        if not self.gt_count:
            return float("nan")
        return 1.0 - (self.fp + self.fn + self.ids) / self.gt_count

    @property
    def map(self) -> float:
        vals = [r.map for r in self.reports if r.per_joint_ap]
        return float(np.mean(vals)) if vals else float("nan")


@dataclass
class AblationResult:
    rows: dict[Mode, AblationRow]
    # per scenario: {mode: (fp, fn, ids)}
    per_scenario: list[dict[Mode, tuple[int, int, int]]]

    @property
    def fp_fn_equal(self) -> bool:
        return all(len({(fp, fn) for fp, fn, _ in s.values()}) == 1 for s in self.per_scenario)

    def ids_reduction(self, mode=Mode.OCCLUSION_AWARE, baseline=Mode.IOU_ONLY) -> float:
        base = self.rows[baseline].ids
        return (base - self.rows[mode].ids) / base if base else 0.0


def ablate_streams(streams, tracker_cfg: TrackerConfig = TrackerConfig(), eval_cfg: EvalConfig = EvalConfig()) -> AblationResult:
    """Track each ``(detections, ground_truth)`` pair in all three modes."""
    rows = {m: AblationRow(m) for m in MODES}
    per = []
    for det, gt in streams:
        counts = {}
        for mode in MODES:
            cfg = dataclasses.replace(tracker_cfg, mode=mode)
            hyp = [tf.labelled() for tf in track_frames(det, cfg)]
            rep = evaluate(gt, hyp, eval_cfg)
            row = rows[mode]
            row.fp += rep.fp
            row.fn += rep.fn
            row.ids += rep.ids
            row.gt_count += rep.gt_count
            row.reports.append(rep)
            counts[mode] = (rep.fp, rep.fn, rep.ids)
        per.append(counts)
    return AblationResult(rows, per)


def ablate_scenarios(scenarios, tracker_cfg: TrackerConfig = TrackerConfig(), eval_cfg: EvalConfig = EvalConfig()) -> AblationResult:
    return ablate_streams((generate(s) for s in scenarios), tracker_cfg, eval_cfg)


def bench_scenario(n_detections: int = 100, n_frames: int = 200, reid_dim: int = 128, seed: int = 0) -> ScenarioConfig:
    """A crowded random-walk scene with exactly ``n_detections`` per frame."""
    return ScenarioConfig(
        seed=seed,
        n_persons=n_detections,
        n_frames=n_frames,
        arena_w=4000.0,
        arena_h=3000.0,
        height_min=80.0,
        height_max=160.0,
        layout="random",
        reid_dim=reid_dim,
    )


@dataclass
class BenchResult:
    latencies_ms: np.ndarray
    detections_per_frame: float

    def percentile(self, q: float) -> float:
        return float(np.percentile(self.latencies_ms, q))

    @property
    def fps(self) -> float:
        return 1000.0 / float(np.mean(self.latencies_ms))


def bench(frames, tracker_cfg: TrackerConfig = TrackerConfig(), warmup: int = 10) -> BenchResult:
    """Time :meth:`Tracker.update` on each frame after ``warmup`` untimed frames."""
    frames = list(frames)
    tracker = Tracker(tracker_cfg)
    lat = []
    for i, frame in enumerate(frames):
        t0 = time.perf_counter()
        tracker.update(frame)
        dt = time.perf_counter() - t0
        if i >= warmup:
            lat.append(dt * 1000.0)
    if not lat:
        raise ValueError("no timed frames; lower warmup or add frames")
    timed = frames[warmup:]
    return BenchResult(np.array(lat), float(np.mean([len(f.detections) for f in timed])))
