"""Command line entry point: ``occtrack <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import config as config_mod
from .errors import ConfigError, OcctrackError
from .experiments import MODES, ablate_scenarios, ablate_streams, bench, bench_scenario
from .geometry import Box
from .metrics import evaluate
from .sifp import plan, scale_histogram
from .simulator import JOINT_NAMES, generate
from .streams import read_stream, write_stream
from .tracker import track_frames

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _settings(args, flag_values: dict):
    values = {}
    if getattr(args, "config", None):
        values.update(config_mod.load_file(args.config))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values.update(config_mod.parse_text(f"{k.strip()} = {v.strip()}", "--set"))
    values.update({k: str(v) for k, v in flag_values.items() if v is not None})
    return config_mod.build(values)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _print_kv(pairs, out):
    for k, v in pairs:
        out.write(f"{k} = {_fmt(v)}\n")


def _print_table(header, rows, out):
    out.write("\t".join(header) + "\n")
    for r in rows:
        out.write("\t".join(f"{v:.4f}" if isinstance(v, float) else str(v) for v in r) + "\n")


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _scenario_flags(args):
    return {
        "seed": args.seed,
        "n_persons": args.persons,
        "n_frames": args.frames,
        "layout": args.layout,
        "detector_fp_rate": args.fp_rate,
        "detector_fn_rate": args.fn_rate,
    }


# -- subcommands ---------------------------------------------------------------


def cmd_track(args, out):
    s = _settings(args, {
        "mode": args.mode, "assignment": args.assignment, "max_age": args.max_age,
        "cost_gate": args.cost_gate, "theta_pos": args.theta_pos, "min_score": args.min_score,
    })
    frames = read_stream(args.input, s.tracker.occlusion.n_keypoints, s.tracker.reid_dim)
    write_stream(track_frames(frames, s.tracker), out if args.output == "-" else args.output)
    return 0


def cmd_eval(args, out):
    s = _settings(args, {"eval_threshold": args.threshold})
    nk = s.tracker.occlusion.n_keypoints
    gt = list(read_stream(args.gt, nk))
    hyp = list(read_stream(args.hyp, nk))
    rep = evaluate(gt, hyp, s.eval)
    d = rep.as_dict()
    pairs = [(k, v) for k, v in d.items() if k != "per_joint_ap"]
    pairs += [(f"ap_joint_{j}", v) for j, v in enumerate(rep.per_joint_ap)]
    _print_kv(pairs, out)
    if args.json:
        _write_json(args.json, d)
    if args.plot_dir and rep.per_joint_ap:
        from .plotting import plot_joint_ap

        names = JOINT_NAMES if len(rep.per_joint_ap) == len(JOINT_NAMES) else None
        plot_joint_ap(rep.per_joint_ap, os.path.join(args.plot_dir, "joint_ap.png"), names)
    return 0


def cmd_simulate(args, out):
    s = _settings(args, _scenario_flags(args))
    det, gt = generate(s.scenario)
    write_stream(det, out if args.det == "-" else args.det)
    if args.gt:
        write_stream(gt, out if args.gt == "-" else args.gt)
    return 0


def _load_coco(path, category):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        images = {im["id"]: (float(im["width"]), float(im["height"])) for im in doc["images"]}
        anns = doc.get("annotations", [])
    except (KeyError, TypeError) as e:
        raise OcctrackError(f"{path}: not a COCO annotation file ({e})") from None
    boxes = {i: [] for i in images}
    for a in anns:
        if category is not None and a.get("category_id") != category:
            continue
        if a.get("image_id") not in images:
            raise OcctrackError(f"{path}: annotation {a.get('id')} refers to unknown image {a.get('image_id')}")
        W, H = images[a["image_id"]]
        x, y, w, h = (float(v) for v in a["bbox"])
        # COCO boxes occasionally spill a fraction of a pixel past the border.
        x0, y0 = min(max(x, 0.0), W), min(max(y, 0.0), H)
        x1, y1 = min(max(x + w, x0), W), min(max(y + h, y0), H)
        boxes[a["image_id"]].append(Box(x0, y0, x1, y1))
    return images, boxes


def cmd_sifp_plan(args, out):
    s = _settings(args, {"oversize": args.oversize})
    images, boxes = _load_coco(args.annotations, args.category)
    ids = sorted(images)
    if args.image_id is not None:
        if args.image_id not in images:
            raise OcctrackError(f"image {args.image_id} not in {args.annotations}")
        ids = [args.image_id]
    header = ["image_id", "omega", "objects", "included", "excluded", "oversized", "chips"] + [f"fpn{i}" for i in range(1, 6)]
    rows, plans, hist_total = [], {}, None
    for iid in ids:
        W, H = images[iid]
        p = plan(W, H, boxes[iid], s.sifp)
        plans[iid] = p
        for lv in p.levels:
            counts = [sum(1 for v in lv.fpn_levels.values() if v == k) for k in range(1, 6)]
            rows.append([iid, f"{lv.omega:g}", len(boxes[iid]), len(lv.included), len(lv.excluded), len(lv.oversized), len(lv.chips)] + counts)
        hist = scale_histogram(p)
        if hist_total is None:
            hist_total = hist
        else:
            for acc, h in zip(hist_total, hist):
                for k, v in h.items():
                    if k != "bin":
                        acc[k] += v
    _print_table(header, rows, out)
    if hist_total:
        out.write("\n")
        keys = list(hist_total[0].keys())
        _print_table(keys, [[r[k] for k in keys] for r in hist_total], out)
    if args.out:
        _write_json(args.out, {str(i): _plan_dict(p) for i, p in plans.items()})
    if args.plot_dir and hist_total:
        from .plotting import plot_scale_histogram

        plot_scale_histogram(hist_total, s.sifp.omegas, os.path.join(args.plot_dir, "scale_histogram.png"))
    return 0


def _plan_dict(p):
    return {
        "image_width": p.image_width,
        "image_height": p.image_height,
        "levels": [
            {
                "omega": lv.omega,
                "scaled_size": [lv.scaled_width, lv.scaled_height],
                "included": list(lv.included),
                "excluded": list(lv.excluded),
                "oversized": list(lv.oversized),
                "fpn_levels": {str(k): v for k, v in sorted(lv.fpn_levels.items())},
                "chips": [
                    {"rect": c.rect.as_list(), "objects": list(c.objects), "ignored": list(c.ignored), "padded": c.padded}
                    for c in lv.chips
                ],
            }
            for lv in p.levels
        ],
    }


def cmd_bench(args, out):
    s = _settings(args, {"mode": args.mode, "reid_dim": args.dim})
    scenario = bench_scenario(args.detections, args.frames + args.warmup, s.tracker.reid_dim, args.seed)
    det, _ = generate(scenario)
    res = bench(det, s.tracker, warmup=args.warmup)
    _print_kv(
        [
            ("mode", s.tracker.mode.value),
            ("frames", len(res.latencies_ms)),
            ("detections_per_frame", res.detections_per_frame),
            ("reid_dim", s.tracker.reid_dim),
            ("p50_ms", res.percentile(50)),
            ("p90_ms", res.percentile(90)),
            ("p99_ms", res.percentile(99)),
            ("mean_ms", float(res.latencies_ms.mean())),
            ("fps", res.fps),
        ],
        out,
    )
    if args.plot_dir:
        from .plotting import plot_latency

        plot_latency(res.latencies_ms, os.path.join(args.plot_dir, "latency.png"))
    return 0


def cmd_ablate(args, out):
    s = _settings(args, _scenario_flags(args))
    if bool(args.det) != bool(args.gt):
        raise UsageError("ablate: --det and --gt must be given together")
    if args.det:
        nk = s.tracker.occlusion.n_keypoints
        streams = [(list(read_stream(args.det, nk, s.tracker.reid_dim)), list(read_stream(args.gt, nk)))]
        result = ablate_streams(streams, s.tracker, s.eval)
    else:
        import dataclasses

        base = s.scenario
        scenarios = [dataclasses.replace(base, seed=base.seed + k, sequence="") for k in range(args.scenarios)]
        result = ablate_scenarios(scenarios, s.tracker, s.eval)
    header = ["strategy", "mAP", "MOTA", "FP", "FN", "IDS"]
    rows = [[m.value, result.rows[m].map, result.rows[m].mota, result.rows[m].fp, result.rows[m].fn, result.rows[m].ids] for m in MODES]
    _print_table(header, rows, out)
    out.write("\n")
    _print_kv([("fp_fn_equal", result.fp_fn_equal), ("ids_reduction_vs_iou_only", result.ids_reduction())], out)
    if args.json:
        _write_json(args.json, {
            "rows": [dict(zip(header, r)) for r in rows],
            "fp_fn_equal": result.fp_fn_equal,
            "per_scenario": [{m.value: list(v) for m, v in sc.items()} for sc in result.per_scenario],
        })
    if args.plot_dir:
        from .plotting import plot_ablation

        plot_ablation(result, os.path.join(args.plot_dir, "ablation.png"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one configuration key")

    sim = _Parser(add_help=False)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--persons", type=int)
    sim.add_argument("--frames", type=int)
    sim.add_argument("--layout", choices=("crossing", "random"))
    sim.add_argument("--fp-rate", type=float)
    sim.add_argument("--fn-rate", type=float)

    p = _Parser(prog="occtrack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    mode_choices = [m.value for m in MODES]

    t = sub.add_parser("track", parents=[common], help="track a detection stream")
    t.add_argument("-i", "--input", default="-")
    t.add_argument("-o", "--output", default="-")
    t.add_argument("--mode", choices=mode_choices)
    t.add_argument("--assignment", choices=("hungarian", "greedy"))
    t.add_argument("--max-age", type=int)
    t.add_argument("--cost-gate", type=float)
    t.add_argument("--theta-pos", type=float)
    t.add_argument("--min-score", type=float)
    t.set_defaults(func=cmd_track)

    e = sub.add_parser("eval", parents=[common], help="CLEAR-MOT and pose AP report")
    e.add_argument("--gt", required=True)
    e.add_argument("--hyp", required=True)
    e.add_argument("--threshold", type=float, help="maximum match distance")
    e.add_argument("--json", help="also write the report as JSON")
    e.add_argument("--plot-dir")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("simulate", parents=[common, sim], help="write synthetic detection and ground-truth streams")
    s.add_argument("--det", default="-")
    s.add_argument("--gt")
    s.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sifp-plan", parents=[common], help="plan scale-normalised training chips")
    sp.add_argument("--annotations", required=True, help="COCO-style annotation JSON")
    sp.add_argument("--image-id", type=int)
    sp.add_argument("--category", type=int, help="only this category_id")
    sp.add_argument("--oversize", choices=("error", "ignore"))
    sp.add_argument("--out", help="write the full plan as JSON")
    sp.add_argument("--plot-dir")
    sp.set_defaults(func=cmd_sifp_plan)

    b = sub.add_parser("bench", parents=[common], help="per-frame tracking latency")
    b.add_argument("--detections", type=int, default=100)
    b.add_argument("--frames", type=int, default=200)
    b.add_argument("--dim", type=int)
    b.add_argument("--mode", choices=mode_choices)
    b.add_argument("--warmup", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--plot-dir")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("ablate", parents=[common, sim], help="compare the three tracking modes")
    a.add_argument("--det")
    a.add_argument("--gt")
    a.add_argument("--scenarios", type=int, default=1)
    a.add_argument("--json")
    a.add_argument("--plot-dir")
    a.set_defaults(func=cmd_ablate)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except (UsageError, ConfigError) as e:
        sys.stderr.write(f"occtrack: error: {e}\n")
        return EXIT_USAGE
    except (OcctrackError, OSError, json.JSONDecodeError, ValueError) as e:
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        sys.stderr.write(f"occtrack: error: {msg}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
