"""Command-line entry points: init, run, simulate, eval, bench."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import TrackSentryError
from .geometry import Pose, load_model
from .imageio import read_pgm
from .mask import BinaryMask


def _cmd_simulate(args):
    from .simulator import SceneScript, generate, write_scene
    script = SceneScript.load(args.script)
    model = load_model(script.model_ref)
    frames = generate(script, args.seed, model)
    write_scene(frames, script, args.out)
    print(f"wrote {len(frames)} frames to {args.out}")
    return 0


def _cmd_init(args):
    from .pipeline import Pipeline, PipelineConfig, pose_to_dict, state_to_dict
    cfg = PipelineConfig(model_path=args.model, scene_dir=args.scene,
                         out_dir=args.out, seed=args.seed)
    pipe = Pipeline(cfg)
    try:
        frame0 = pipe.frame(0)
        if args.click:
            u, v = (float(x) for x in args.click.split(","))
            ref, state, pose = pipe.init_from_click(frame0, (u, v))
        else:
            ref, state, pose = pipe.init_from_reference(frame0, args.reference)
        out = {"reference_image": ref, "state": state_to_dict(state),
               "pose": pose_to_dict(pose)}
        print(json.dumps(out, indent=2, sort_keys=True))
        return 0
    finally:
        pipe.close()


def _cmd_run(args):
    from .pipeline import Pipeline, PipelineConfig
    cfg = PipelineConfig.from_json(args.config, seed=args.seed)
    pipe = Pipeline(cfg)
    try:
        summary = pipe.run()
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0
    finally:
        pipe.close()


def _load_trajectory(path):
    """Accepts gt.jsonl records ({R, t}) or results.jsonl records ({pose})."""
    poses = []
    with open(path) as f:
        for line in f:
            rec = json.loads(line)
            if "pose" in rec:
                p = rec["pose"]
            else:
                p = rec if "R" in rec else None
            if p is None:
                poses.append(None)
            else:
                poses.append(Pose(np.asarray(p["R"]).reshape(3, 3),
                                  np.asarray(p["t"])))
    return poses


def _load_mask_dir(path):
    names = sorted(n for n in os.listdir(path) if n.endswith(".pgm"))
    return [BinaryMask(read_pgm(os.path.join(path, n))) for n in names]


def _cmd_eval(args):
    from .evaluation import evaluate_trajectories
    pred = _load_trajectory(args.pred)
    gt = _load_trajectory(args.gt)
    model = load_model(args.model)
    kwargs = {}
    if args.masks_pred and args.masks_gt:
        kwargs["pred_masks"] = _load_mask_dir(args.masks_pred)
        kwargs["gt_masks"] = _load_mask_dir(args.masks_gt)
    report = {"per_object": {model.id: evaluate_trajectories(pred, gt, model, **kwargs)}}
    timings = os.path.join(os.path.dirname(args.pred), "timings.jsonl")
    if os.path.exists(timings):
        from .evaluation import runtime_report
        log = {}
        with open(timings) as f:
            for line in f:
                for stage, ms in json.loads(line)["timings_ms"].items():
                    log.setdefault(stage, []).append(ms)
        if log:
            report["runtime"] = runtime_report(log).as_dict()
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_bench(args):
    from .bench import bench_pipeline
    from .pipeline import PipelineConfig
    report = bench_pipeline(PipelineConfig.from_json(args.config, seed=args.seed))
    print(json.dumps(report, indent=2, sort_keys=True))
    mean_ms = report["supervisor_mean_ms"]
    budget = 5.0
    status = "OK" if mean_ms is not None and mean_ms < budget else "OVER BUDGET"
    print(f"supervision overhead: {mean_ms:.3f} ms/frame "
          f"(budget {budget} ms) -> {status}", file=sys.stderr)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="tracksentry",
                                description="Supervised 6D pose tracking toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="render a scripted synthetic scene")
    s.add_argument("--script", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("init", help="initialize tracking on a scene")
    s.add_argument("--scene", required=True)
    s.add_argument("--model", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--click", help="U,V pixel coordinates")
    g.add_argument("--reference", help="reference segmented image (PPM)")
    s.add_argument("--out", default="out")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_init)

    s = sub.add_parser("run", help="process a whole scene")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=_cmd_run)

    s = sub.add_parser("eval", help="score predicted vs ground-truth trajectories")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--masks-pred")
    s.add_argument("--masks-gt")
    s.set_defaults(func=_cmd_eval)

    s = sub.add_parser("bench", help="benchmark supervision overhead and kernels")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=_cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrackSentryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
