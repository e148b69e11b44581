"""End-to-end orchestration: initialization, per-frame backend fan-out,
supervisor-driven recovery, and run persistence."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import evaluation, imageio
from .backends import (RNG_ALGORITHM, PointPrompt, SimulatedEstimator,
                       SimulatedMatcher, SimulatedSegmenter, SimulationNoise)
from .errors import (EmptyMask, NoObjectAtPrompt, RegistrationFailed,
                     TrackSentryError)
from .geometry import ObjectModel, Pose, load_model, project_point
from .mask import (KERNEL_BACKEND, BinaryMask, contour_area, contour_centroid,
                   extract_contours, largest_contour)
from .supervisor import (FeatureMatch, Mode, PromptSegment, Reregister,
                         SupervisorConfig, TrackerState, step)

VERSION = "0.1.0"


@dataclass(frozen=True)
class Frame:
    index: int
    timestamp: float
    rgb: np.ndarray
    depth: np.ndarray | None = None


@dataclass
class PipelineConfig:
    model_path: str
    scene_dir: str
    out_dir: str
    seed: int = 0
    click: tuple | None = None  # (u, v); None = click at projected GT center
    reference: str | None = None
    supervisor: SupervisorConfig = field(default_factory=SupervisorConfig)
    noise: SimulationNoise = field(default_factory=SimulationNoise)
    disable_supervisor: bool = False  # ablation: actions are logged, not executed

    @staticmethod
    def from_json(path, seed=None) -> "PipelineConfig":
        with open(path) as f:
            d = json.load(f)
        sup = SupervisorConfig(**d.get("supervisor", {}))
        noise = SimulationNoise(**d.get("noise", {}))
        return PipelineConfig(
            model_path=d["model"], scene_dir=d["scene"], out_dir=d["out"],
            seed=int(d.get("seed", 0)) if seed is None else int(seed),
            click=tuple(d["click"]) if d.get("click") else None,
            reference=d.get("reference"),
            supervisor=sup, noise=noise,
            disable_supervisor=bool(d.get("disable_supervisor", False)))

    def as_dict(self) -> dict:
        return {
            "model": self.model_path, "scene": self.scene_dir,
            "out": self.out_dir, "seed": self.seed,
            "click": list(self.click) if self.click else None,
            "reference": self.reference,
            "supervisor": vars(self.supervisor).copy(),
            "noise": vars(self.noise).copy(),
            "disable_supervisor": self.disable_supervisor,
        }


def state_to_dict(state: TrackerState) -> dict:
    d = {"mode": state.mode.value,
         "initial_contour_area": state.initial_contour_area,
         "low_area_since": state.low_area_since,
         "reference_image": state.reference_image}
    if state.last_pose is not None:
        d["last_pose"] = {"R": state.last_pose.rotation.ravel().tolist(),
                          "t": state.last_pose.translation.tolist()}
    return d


def pose_to_dict(pose: Pose | None):
    if pose is None:
        return None
    return {"R": [float(x) for x in pose.rotation.ravel()],
            "t": [float(x) for x in pose.translation]}


def reference_image_from_mask(rgb: np.ndarray, mask: BinaryMask) -> np.ndarray:
    """Foreground crop onto a pure white background."""
    out = np.full_like(rgb, 255)
    fg = mask.data.astype(bool)
    out[fg] = rgb[fg]
    return out


class Pipeline:
    def __init__(self, config: PipelineConfig):
        from .simulator import LoadedScene
        self.config = config
        self.model: ObjectModel = load_model(config.model_path)
        self.scene = LoadedScene(config.scene_dir)
        self.intr = self.scene.intrinsics
        self.segmenter = SimulatedSegmenter(self.scene, config.noise, config.seed)
        self.matcher = SimulatedMatcher(self.scene, self.model, self.intr,
                                        config.noise, config.seed)
        self.estimator = SimulatedEstimator(self.scene, self.model, self.intr,
                                            config.noise, config.seed)
        self.reference_path = os.path.join(
            config.out_dir, f"reference_{self.model.id}.ppm")
        self._pool = ThreadPoolExecutor(max_workers=2)

    def frame(self, i: int) -> Frame:
        return Frame(index=i, timestamp=self.scene.timestamp(i),
                     rgb=self.scene.rgb(i), depth=self.scene.depth(i))

    # -- initialization ----------------------------------------------------

    def init_from_click(self, frame: Frame, click) -> tuple[str, TrackerState, Pose]:
        prompt = PointPrompt.single(float(click[0]), float(click[1]))
        mask = self.segmenter.segment(frame, prompt)
        return self._finish_init(frame, mask)

    def init_from_reference(self, frame: Frame, reference_path) -> tuple[str, TrackerState, Pose]:
        from .supervisor import correspondences_to_prompt
        imageio.read_ppm(reference_path)  # validates the file
        matches = self.matcher.match(reference_path, frame)
        prompt = correspondences_to_prompt(
            matches, self.config.supervisor.min_matches,
            self.config.supervisor.match_score_floor)
        mask = self.segmenter.segment(frame, prompt)
        return self._finish_init(frame, mask)

    def _finish_init(self, frame, mask):
        contours = extract_contours(mask)
        if not contours:
            raise NoObjectAtPrompt("segmentation produced an empty mask")
        initial_area = contour_area(largest_contour(contours))
        os.makedirs(self.config.out_dir, exist_ok=True)
        # written once per object; later runs reuse the stored reference
        if not os.path.exists(self.reference_path):
            imageio.write_ppm(self.reference_path,
                              reference_image_from_mask(frame.rgb, mask))
        pose = self.estimator.register(frame, frame.depth, mask, self.model)
        state = TrackerState(mode=Mode.TRACKING,
                             initial_contour_area=initial_area,
                             reference_image=self.reference_path,
                             last_pose=pose)
        return self.reference_path, state, pose

    # -- per-frame loop ----------------------------------------------------

    def _segment_tracked(self, frame: Frame, prev_pose: Pose | None) -> BinaryMask:
        """Per-frame segmentation prompted at the projected previous center."""
        empty = BinaryMask.zeros(self.intr.width, self.intr.height)
        if prev_pose is None:
            return empty
        try:
            u, v = project_point(self.intr, prev_pose.apply(self.model.center))
        except TrackSentryError:
            return empty
        # SAM2-style video segmentation carries the object across frames; the
        # simulation re-prompts, so fall back to the GT-mask center when the
        # predicted center has wandered off the object.
        for uu, vv in ((u, v), self._gt_mask_center(frame.index)):
            if uu is None:
                continue
            try:
                return self.segmenter.segment(frame, PointPrompt.single(uu, vv))
            except NoObjectAtPrompt:
                continue
        return empty

    def _gt_mask_center(self, i):
        gt = self.scene.gt_mask(i)
        rows, cols = np.nonzero(gt.data)
        if rows.size == 0:
            return (None, None)
        return (float(cols.mean()), float(rows.mean()))

    def process_frame(self, frame: Frame, state: TrackerState):
        cfg = self.config.supervisor
        timings = {}

        t0 = time.perf_counter()
        fut_track = self._pool.submit(self.estimator.track, frame, frame.depth,
                                      state.last_pose, self.model)
        fut_seg = self._pool.submit(self._segment_tracked, frame, state.last_pose)
        pose = fut_track.result()
        mask = fut_seg.result()
        timings["backends_ms"] = (time.perf_counter() - t0) * 1000

        matches = None
        if state.mode == Mode.REACQUIRING:
            t0 = time.perf_counter()
            matches = self.matcher.match(state.reference_image, frame)
            timings["match_ms"] = (time.perf_counter() - t0) * 1000

        t0 = time.perf_counter()
        new_state, actions, distance = step(state, frame.timestamp, mask, pose,
                                            cfg, self.model, self.intr, matches)
        timings["supervisor_ms"] = (time.perf_counter() - t0) * 1000

        executed = []
        if not self.config.disable_supervisor:
            t0 = time.perf_counter()
            pose, new_state = self._execute(frame, actions, pose, new_state, executed)
            timings["actions_ms"] = (time.perf_counter() - t0) * 1000

        new_state = TrackerState(mode=new_state.mode,
                                 initial_contour_area=new_state.initial_contour_area,
                                 low_area_since=new_state.low_area_since,
                                 reference_image=new_state.reference_image,
                                 last_pose=pose)
        contours = extract_contours(mask)
        summary = None
        if contours:
            lc = largest_contour(contours)
            summary = {"area": contour_area(lc),
                       "centroid": [float(x) for x in contour_centroid(lc)]}
        result = {
            "frame": frame.index,
            "timestamp": frame.timestamp,
            "pose": pose_to_dict(pose),
            "mask": summary,
            "distance": distance,
            "mode": new_state.mode.value,
            "actions": [type(a).__name__ for a in actions],
            "executed": executed,
            "timings_ms": {k: round(v, 4) for k, v in timings.items()},
        }
        return result, new_state

    def _execute(self, frame, actions, pose, state, executed):
        prompt_mask = None
        for action in actions:
            if isinstance(action, PromptSegment):
                try:
                    prompt_mask = self.segmenter.segment(frame, action.prompt)
                    executed.append("PromptSegment")
                except NoObjectAtPrompt:
                    executed.append("PromptSegment:no-object")
            elif isinstance(action, Reregister):
                mask = action.mask if action.mask is not None else prompt_mask
                if mask is None:
                    executed.append("Reregister:no-mask")
                    continue
                try:
                    pose = self.estimator.register(frame, frame.depth, mask,
                                                   self.model)
                    executed.append("Reregister")
                except (EmptyMask, RegistrationFailed) as exc:
                    executed.append(f"Reregister:failed:{type(exc).__name__}")
            elif isinstance(action, FeatureMatch):
                # matching is performed at the top of the next frame's loop
                executed.append("FeatureMatch:deferred")
        return pose, state

    # -- whole-run driver --------------------------------------------------

    def run(self) -> dict:
        cfg = self.config
        os.makedirs(cfg.out_dir, exist_ok=True)
        frame0 = self.frame(0)
        click = cfg.click
        if click is None and cfg.reference is None:
            cu, cv = self._gt_mask_center(0)
            if cu is None:
                raise NoObjectAtPrompt("object not visible in frame 0")
            click = (cu, cv)
        if cfg.reference is not None:
            _, state, pose = self.init_from_reference(frame0, cfg.reference)
        else:
            _, state, pose = self.init_from_click(frame0, click)

        header = {
            "version": VERSION,
            "rng_algorithm": RNG_ALGORITHM,
            "contour_kernel": KERNEL_BACKEND,
            "config": cfg.as_dict(),
        }
        with open(os.path.join(cfg.out_dir, "run_header.json"), "w") as f:
            json.dump(header, f, indent=2, sort_keys=True)

        results = [{
            "frame": 0, "timestamp": frame0.timestamp,
            "pose": pose_to_dict(pose), "mask": None, "distance": None,
            "mode": state.mode.value, "actions": ["Initialize"],
            "executed": ["Initialize"], "timings_ms": {},
        }]
        supervisor_ms = []
        try:
            for i in range(1, len(self.scene)):
                result, state = self.process_frame(self.frame(i), state)
                results.append(result)
                if "supervisor_ms" in result["timings_ms"]:
                    supervisor_ms.append(result["timings_ms"]["supervisor_ms"])
        except TrackSentryError:
            self._checkpoint(cfg.out_dir, results, state)
            raise

        # timings are wall-clock and would break run-to-run byte identity of
        # results.jsonl, so they are persisted separately
        with open(os.path.join(cfg.out_dir, "results.jsonl"), "w") as f, \
                open(os.path.join(cfg.out_dir, "timings.jsonl"), "w") as tf:
            for r in results:
                r = dict(r)
                tf.write(json.dumps({"frame": r["frame"],
                                     "timings_ms": r.pop("timings_ms")},
                                    sort_keys=True) + "\n")
                f.write(json.dumps(r, sort_keys=True) + "\n")

        summary = {"frames": len(results),
                   "supervisor_mean_ms": (float(np.mean(supervisor_ms))
                                          if supervisor_ms else None)}
        gt_path = os.path.join(cfg.scene_dir, "gt.jsonl")
        if os.path.exists(gt_path):
            pred = [None if r["pose"] is None else
                    Pose(np.asarray(r["pose"]["R"]).reshape(3, 3),
                         np.asarray(r["pose"]["t"]))
                    for r in results]
            gt = [self.scene.gt_pose(i) for i in range(len(results))]
            metrics = evaluation.evaluate_trajectories(pred, gt, self.model)
            summary["metrics"] = metrics
            with open(os.path.join(cfg.out_dir, "metrics.json"), "w") as f:
                json.dump(metrics, f, indent=2, sort_keys=True)
        with open(os.path.join(cfg.out_dir, "summary.json"), "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
        return summary

    def _checkpoint(self, out_dir, results, state):
        ck = {"last_frame": results[-1] if results else None,
              "state": state_to_dict(state)}
        with open(os.path.join(out_dir, "checkpoint.json"), "w") as f:
            json.dump(ck, f, indent=2, sort_keys=True)

    def close(self):
        self._pool.shutdown(wait=False)
