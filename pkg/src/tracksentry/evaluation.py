"""Pose and segmentation metrics: ADD, ADD-S, thresholded accuracy, AUC,
average IoU, and runtime statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import (EmptyLog, EmptyModel, EmptySampleSet, LengthMismatch)
from .geometry import ObjectModel, Pose
from .mask import BinaryMask, mask_iou

# exhaustive nearest-neighbor below this point count, KD-tree above
_ADDS_EXHAUSTIVE_LIMIT = 5000


@dataclass(frozen=True)
class ErrorSample:
    frame: int
    add: float
    adds: float

    def __post_init__(self):
        if self.adds > self.add + 1e-12:
            raise ValueError("ADD-S cannot exceed ADD")


@dataclass(frozen=True)
class StageStats:
    mean: float
    p50: float
    p95: float
    count: int

    def as_dict(self):
        return {"mean_ms": self.mean, "p50_ms": self.p50,
                "p95_ms": self.p95, "count": self.count}


@dataclass(frozen=True)
class RuntimeReport:
    """Per-stage timing summary: initialization and per-frame tracking."""
    stages: dict  # stage name -> StageStats

    def as_dict(self):
        return {name: s.as_dict() for name, s in self.stages.items()}


def add_error(pred: Pose, gt: Pose, model: ObjectModel) -> float:
    """Mean distance between index-matched transformed model points."""
    if model.points.shape[0] == 0:
        raise EmptyModel("model has no points")
    diff = pred.apply(model.points) - gt.apply(model.points)
    return float(np.linalg.norm(diff, axis=1).mean())


def adds_error(pred: Pose, gt: Pose, model: ObjectModel) -> float:
    """Mean nearest-neighbor distance from predicted to ground-truth cloud."""
    if model.points.shape[0] == 0:
        raise EmptyModel("model has no points")
    p = pred.apply(model.points)
    g = gt.apply(model.points)
    if model.points.shape[0] <= _ADDS_EXHAUSTIVE_LIMIT:
        d2 = np.sum((p[:, None, :] - g[None, :, :]) ** 2, axis=2)
        return float(np.sqrt(d2.min(axis=1)).mean())
    dists, _ = cKDTree(g).query(p, k=1)
    return float(dists.mean())


def accuracy(errors, model: ObjectModel, alpha_add: float = 0.1) -> float:
    """Fraction of errors strictly below alpha_add * max model diameter."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise EmptySampleSet("no error samples")
    return float(np.mean(errors < alpha_add * model.max_diameter))


def auc(errors, max_threshold: float) -> float:
    """Normalized area under the accuracy-vs-threshold step curve.

    Equals the mean over samples of (T - min(err, T)) / T.
    """
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise EmptySampleSet("no error samples")
    if max_threshold <= 0:
        raise ValueError("max_threshold must be positive")
    clipped = np.minimum(errors, max_threshold)
    return float(np.mean((max_threshold - clipped) / max_threshold))


def average_iou(pred_masks, gt_masks):
    """Mean per-frame IoU; frames with both masks empty are skipped.

    Returns (mean_iou, skipped_count).
    """
    if len(pred_masks) != len(gt_masks):
        raise LengthMismatch(
            f"{len(pred_masks)} predicted vs {len(gt_masks)} ground-truth masks")
    if len(pred_masks) == 0:
        raise EmptySampleSet("no mask pairs")
    total = 0.0
    comp = 0.0  # Kahan compensation for order-independent determinism
    n = 0
    skipped = 0
    for p, g in zip(pred_masks, gt_masks):
        if p.count() == 0 and g.count() == 0:
            skipped += 1
            continue
        y = mask_iou(p, g) - comp
        t = total + y
        comp = (t - total) - y
        total = t
        n += 1
    if n == 0:
        raise EmptySampleSet("every frame had both masks empty")
    return total / n, skipped


def runtime_report(timing_log: dict) -> RuntimeReport:
    """Summarize a {stage: [milliseconds, ...]} log."""
    if not timing_log or all(len(v) == 0 for v in timing_log.values()):
        raise EmptyLog("no timing samples")
    stages = {}
    for name, samples in timing_log.items():
        if len(samples) == 0:
            continue
        arr = np.asarray(samples, dtype=np.float64)
        stages[name] = StageStats(mean=float(arr.mean()),
                                  p50=float(np.percentile(arr, 50)),
                                  p95=float(np.percentile(arr, 95)),
                                  count=int(arr.size))
    return RuntimeReport(stages=stages)


def evaluate_trajectories(pred_poses, gt_poses, model: ObjectModel,
                          alpha_add: float = 0.1,
                          auc_max_threshold: float = 0.1,
                          pred_masks=None, gt_masks=None) -> dict:
    """Joined report over aligned pose (and optionally mask) sequences.

    Missing predictions (None entries) count as errors at the model diameter,
    so dropped frames penalize rather than vanish.
    """
    if len(pred_poses) != len(gt_poses):
        raise LengthMismatch(
            f"{len(pred_poses)} predicted vs {len(gt_poses)} ground-truth poses")
    if len(gt_poses) == 0:
        raise EmptySampleSet("no pose pairs")
    adds = []
    add = []
    for p, g in zip(pred_poses, gt_poses):
        if p is None:
            add.append(model.max_diameter)
            adds.append(model.max_diameter)
        else:
            add.append(add_error(p, g, model))
            adds.append(adds_error(p, g, model))
    report = {
        "add_auc": auc(add, auc_max_threshold),
        "adds_auc": auc(adds, auc_max_threshold),
        "add_accuracy": accuracy(add, model, alpha_add),
        "adds_accuracy": accuracy(adds, model, alpha_add),
        "mean_add": float(np.mean(add)),
        "mean_adds": float(np.mean(adds)),
        "frames": len(gt_poses),
    }
    if pred_masks is not None and gt_masks is not None:
        mean_iou, skipped = average_iou(pred_masks, gt_masks)
        report["mean_iou"] = mean_iou
        report["iou_frames_skipped_both_empty"] = skipped
    return report
