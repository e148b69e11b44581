"""Tracking-loss detection, re-registration, and long-absence recovery.

The supervisor watches per-frame (mask, pose) pairs. A Lorentzian distance
between the mask-boundary centroid and the projected pose center flags
tracking loss and requests re-registration; a contour-area timer detects
long absences and switches to feature-match reacquisition against the
stored reference image.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .backends import Correspondence, PointPrompt
from .errors import InsufficientMatches, NonPositiveDepth
from .geometry import CameraIntrinsics, ObjectModel, Pose, project_point
from .mask import (BinaryMask, Contour, contour_area, contour_centroid,
                   extract_contours, largest_contour)


class Mode(enum.Enum):
    UNINITIALIZED = "uninitialized"
    TRACKING = "tracking"
    REREGISTERING = "reregistering"
    REACQUIRING = "reacquiring"


@dataclass(frozen=True)
class SupervisorConfig:
    sigma: float = 100.0  # px; sensitivity of the Lorentzian distance
    tau: float = 0.2  # coefficient of the model max diameter
    alpha_memory: float = 0.6  # contour-area fraction for the absence timer
    t_memory: float = 10.0  # seconds of low area before reacquisition
    min_matches: int = 8
    match_score_floor: float = 0.0
    threshold_mode: str = "paper-literal"  # or "pixel-projected"
    use_filled_centroid: bool = False

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if not 0 < self.alpha_memory < 1:
            raise ValueError("alpha_memory must be in (0, 1)")
        if self.t_memory <= 0:
            raise ValueError("t_memory must be positive")
        if self.threshold_mode not in ("paper-literal", "pixel-projected"):
            raise ValueError(f"unknown threshold mode {self.threshold_mode!r}")


@dataclass(frozen=True)
class TrackerState:
    mode: Mode
    initial_contour_area: float = 0.0
    low_area_since: float | None = None
    reference_image: str | None = None
    last_pose: Pose | None = None

    def __post_init__(self):
        if self.mode == Mode.UNINITIALIZED and self.reference_image is not None:
            raise ValueError("reference image set before initialization")
        if self.low_area_since is not None and self.mode not in (
                Mode.TRACKING, Mode.REACQUIRING):
            raise ValueError("absence timer only runs in Tracking/Reacquiring")


@dataclass(frozen=True)
class Reregister:
    """Re-register the object; mask=None means use the latest segmentation."""
    mask: BinaryMask | None = None


@dataclass(frozen=True)
class FeatureMatch:
    reference_image: str


@dataclass(frozen=True)
class PromptSegment:
    prompt: PointPrompt


def pixel_offset(contour: Contour, center3d, pose: Pose,
                 intr: CameraIntrinsics) -> float:
    """Distance (px) between boundary centroid and projected pose center."""
    projected = project_point(intr, pose.apply(np.asarray(center3d)))
    return float(np.linalg.norm(contour_centroid(contour) - projected))


def lorentzian_distance(contour: Contour, center3d, pose: Pose,
                        intr: CameraIntrinsics, sigma: float) -> float:
    """log(1 + d^2 / (2 sigma^2)) with d the centroid-to-center pixel offset."""
    d = pixel_offset(contour, center3d, pose, intr)
    return math.log1p(d * d / (2.0 * sigma * sigma))


def loss_threshold(model: ObjectModel, cfg: SupervisorConfig,
                   pose: Pose = None, intr: CameraIntrinsics = None) -> float:
    """Re-registration threshold in the configured mode.

    paper-literal: tau * max_diameter, compared directly against the
    Lorentzian distance. pixel-projected: the diameter projected to pixels
    at the pose-center depth, compared against the raw pixel offset.
    """
    if cfg.threshold_mode == "paper-literal":
        return cfg.tau * model.max_diameter
    if pose is None or intr is None:
        raise ValueError("pixel-projected mode needs pose and intrinsics")
    z = float(pose.apply(model.center)[2])
    if z <= 0:
        raise NonPositiveDepth("model center behind camera")
    return cfg.tau * model.max_diameter * intr.fx / z


def loss_detected(contour: Contour, model: ObjectModel, cfg: SupervisorConfig,
                  pose: Pose, intr: CameraIntrinsics) -> tuple[float, bool]:
    """Returns (Lorentzian distance, exceeded) in the configured mode."""
    try:
        d = pixel_offset(contour, model.center, pose, intr)
    except NonPositiveDepth:
        return float("inf"), True  # center behind camera: certainly lost
    D = math.log1p(d * d / (2.0 * cfg.sigma * cfg.sigma))
    if cfg.threshold_mode == "paper-literal":
        return D, D > loss_threshold(model, cfg)
    return D, d > loss_threshold(model, cfg, pose, intr)


def memory_trigger(area_history, initial_area: float, alpha: float,
                   t: float) -> bool:
    """True iff the trailing contiguous low-area run lasts longer than t.

    History entries are (time, area) in nondecreasing time order; a missing
    contour should be recorded as area 0. One frame at or above the
    threshold resets the run.
    """
    if not area_history:
        return False
    threshold = alpha * initial_area
    run_start = None
    for ts, area in area_history:
        if area < threshold:
            if run_start is None:
                run_start = ts
        else:
            run_start = None
    if run_start is None:
        return False
    return area_history[-1][0] - run_start > t


def geometric_median(points: np.ndarray, tol: float = 1e-9,
                     max_iter: int = 200) -> np.ndarray:
    """Weiszfeld iteration; robust to a minority of gross outliers."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    y = pts.mean(axis=0)
    for _ in range(max_iter):
        d = np.linalg.norm(pts - y, axis=1)
        at_sample = d < 1e-12
        if np.any(at_sample):
            # Restart slightly off the coincident point unless it is optimal
            if np.all(at_sample):
                return pts[0].copy()
            d = np.where(at_sample, 1e-12, d)
        w = 1.0 / d
        y_new = (pts * w[:, None]).sum(axis=0) / w.sum()
        if np.linalg.norm(y_new - y) < tol:
            return y_new
        y = y_new
    return y


def correspondences_to_prompt(matches: list[Correspondence], min_matches: int,
                              score_floor: float = 0.0) -> PointPrompt:
    """Single foreground point at the geometric median of the best matches."""
    good = [m for m in matches if m.score > score_floor]
    if len(good) < min_matches or min_matches <= 0 and not good:
        raise InsufficientMatches(
            f"{len(good)} usable matches, need {min_matches}")
    good.sort(key=lambda m: -m.score)
    top = good[:min_matches] if min_matches > 0 else good
    pts = np.array([m.frame_point for m in top], dtype=np.float64)
    u, v = geometric_median(pts)
    return PointPrompt.single(float(u), float(v))


def step(state: TrackerState, frame_time: float, mask: BinaryMask,
         pose_estimate: Pose | None, cfg: SupervisorConfig,
         model: ObjectModel, intr: CameraIntrinsics,
         matches: list[Correspondence] | None = None):
    """Pure per-frame transition: (state, inputs) -> (state', actions).

    `matches` carries the result of a previously requested FeatureMatch;
    the caller executes every returned action.
    """
    if state.mode == Mode.UNINITIALIZED:
        raise ValueError("supervisor not initialized")

    actions = []
    contours = extract_contours(mask)
    largest = largest_contour(contours) if contours else None
    area = contour_area(largest) if largest is not None else 0.0

    distance = None
    if state.mode == Mode.TRACKING and largest is not None \
            and pose_estimate is not None:
        distance, exceeded = loss_detected(largest, model, cfg,
                                           pose_estimate, intr)
        if exceeded:
            actions.append(Reregister(mask=mask))

    # absence timer: strict contiguity, missing contour counts as area 0
    if area < cfg.alpha_memory * state.initial_contour_area:
        low_since = state.low_area_since if state.low_area_since is not None \
            else frame_time
    else:
        low_since = None

    mode = state.mode
    if mode == Mode.TRACKING and low_since is not None \
            and frame_time - low_since > cfg.t_memory:
        mode = Mode.REACQUIRING
        actions.append(FeatureMatch(reference_image=state.reference_image))
    elif mode == Mode.REACQUIRING:
        reacquired = False
        if matches is not None:
            try:
                prompt = correspondences_to_prompt(
                    matches, cfg.min_matches, cfg.match_score_floor)
                actions.append(PromptSegment(prompt=prompt))
                actions.append(Reregister(mask=None))
                mode = Mode.TRACKING
                low_since = None
                reacquired = True
            except InsufficientMatches:
                pass
        if not reacquired:
            actions.append(FeatureMatch(reference_image=state.reference_image))

    new_state = replace(state, mode=mode, low_area_since=low_since,
                        last_pose=pose_estimate if pose_estimate is not None
                        else state.last_pose)
    return new_state, actions, distance
