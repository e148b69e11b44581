"""Backend contracts for the three neural roles plus deterministic simulations.

Real segmenter/matcher/estimator models are out of scope; the simulated
implementations answer from scene ground truth with seeded noise so every
supervisor path can be exercised reproducibly. External-protocol mode talks
to a server over the length-prefixed JSON protocol (see protocol module).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (BackendUnavailable, EmptyMask, NoObjectAtPrompt,
                     RegistrationFailed)
from .geometry import CameraIntrinsics, ObjectModel, Pose, project_points
from .mask import BinaryMask, mask_iou

RNG_ALGORITHM = "numpy-pcg64"  # recorded in run headers for reproducibility


@dataclass(frozen=True)
class PointPrompt:
    points: np.ndarray  # (N, 2) pixel coordinates (u, v)
    labels: np.ndarray  # (N,) 1 = foreground, 0 = background

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        l = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if p.shape[0] != l.shape[0]:
            raise ValueError("points and labels must have equal length")
        p.setflags(write=False)
        l.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "labels", l)

    @staticmethod
    def single(u, v) -> "PointPrompt":
        return PointPrompt(np.array([[u, v]]), np.array([1]))


@dataclass(frozen=True)
class Correspondence:
    ref_point: tuple  # (u, v) in the reference segmented image
    frame_point: tuple  # (u, v) in the current frame
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # segmenter | matcher | estimator
    mode: str = "in-process-simulated"
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in ("segmenter", "matcher", "estimator"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if (self.mode == "external-protocol") != (self.endpoint is not None):
            raise ValueError("endpoint required exactly when mode is external-protocol")


@dataclass
class SimulationNoise:
    """Noise knobs shared by the simulated backends."""

    segment_dropout: float = 0.0  # fraction of silhouette pixels cleared
    sigma_rot_deg: float = 0.0
    sigma_trans: float = 0.0
    outlier_rate: float = 0.0
    drift_sigma: float = 0.001  # random-walk step (m) when out of basin
    visibility_threshold: float = 0.5
    n_keypoints: int = 32


def _rng(seed, frame_index, stream):
    return np.random.default_rng([seed, frame_index, stream])


def _random_small_rotation(rng, sigma_deg):
    if sigma_deg <= 0:
        return np.eye(3)
    from scipy.spatial.transform import Rotation
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.normal(0.0, np.deg2rad(sigma_deg))
    return Rotation.from_rotvec(axis * angle).as_matrix()


class SimulatedSegmenter:
    """Answers with the scene's ground-truth mask, with optional dropout."""

    def __init__(self, scene, noise: SimulationNoise = None, seed: int = 0):
        self.scene = scene
        self.noise = noise or SimulationNoise()
        self.seed = seed

    def segment(self, frame, prompt: PointPrompt) -> BinaryMask:
        gt = self.scene.gt_mask(frame.index)
        fg = prompt.points[prompt.labels == 1]
        if fg.shape[0] == 0:
            raise NoObjectAtPrompt("prompt has no foreground point")
        u, v = fg[0]
        r, c = int(round(v)), int(round(u))
        h, w = gt.data.shape
        if not (0 <= r < h and 0 <= c < w) or gt.data[r, c] == 0:
            raise NoObjectAtPrompt(f"no object at prompt ({u:.1f}, {v:.1f})")
        data = gt.data.copy()
        if self.noise.segment_dropout > 0:
            rng = _rng(self.seed, frame.index, 1)
            rows, cols = np.nonzero(data)
            drop = rng.random(rows.size) < self.noise.segment_dropout
            data[rows[drop], cols[drop]] = 0
        return BinaryMask(data)


class SimulatedMatcher:
    """Projects seeded model keypoints through the ground-truth pose."""

    def __init__(self, scene, model: ObjectModel, intr: CameraIntrinsics,
                 noise: SimulationNoise = None, seed: int = 0):
        self.scene = scene
        self.model = model
        self.intr = intr
        self.noise = noise or SimulationNoise()
        self.seed = seed
        rng = np.random.default_rng([seed, 0, 2])
        n = min(self.noise.n_keypoints, model.points.shape[0])
        self._kp_idx = rng.choice(model.points.shape[0], size=n, replace=False)

    def match(self, reference, frame) -> list[Correspondence]:
        vis = self.scene.visible_fraction(frame.index)
        if vis < self.noise.visibility_threshold:
            return []
        gt_pose = self.scene.gt_pose(frame.index)
        cam = gt_pose.apply(self.model.points[self._kp_idx])
        keep = cam[:, 2] > 0
        if not np.any(keep):
            return []
        px = project_points(self.intr, cam[keep])
        in_img = ((px[:, 0] >= 0) & (px[:, 0] < self.intr.width)
                  & (px[:, 1] >= 0) & (px[:, 1] < self.intr.height))
        px = px[in_img]
        rng = _rng(self.seed, frame.index, 3)
        out = []
        for i in range(px.shape[0]):
            score = float(0.8 + 0.2 * rng.random())
            out.append(Correspondence(ref_point=(float(px[i, 0]), float(px[i, 1])),
                                      frame_point=(float(px[i, 0]), float(px[i, 1])),
                                      score=score))
        n_outliers = int(round(self.noise.outlier_rate * len(out)))
        for _ in range(n_outliers):
            fp = (float(rng.random() * self.intr.width),
                  float(rng.random() * self.intr.height))
            out.append(Correspondence(ref_point=fp, frame_point=fp,
                                      score=float(0.3 * rng.random())))
        out.sort(key=lambda c: -c.score)
        return out


class SimulatedEstimator:
    """Ground-truth pose plus seeded noise; drifts when out of the basin."""

    def __init__(self, scene, model: ObjectModel, intr: CameraIntrinsics,
                 noise: SimulationNoise = None, seed: int = 0,
                 basin_radius: float = None):
        self.scene = scene
        self.model = model
        self.intr = intr
        self.noise = noise or SimulationNoise()
        self.seed = seed
        # convergence basin defaults to half the model diameter
        self.basin_radius = (0.5 * model.max_diameter
                             if basin_radius is None else basin_radius)

    def _noisy_gt(self, gt_pose: Pose, rng, scale=1.0) -> Pose:
        dR = _random_small_rotation(rng, self.noise.sigma_rot_deg * scale)
        dt = rng.normal(0.0, max(self.noise.sigma_trans * scale, 0.0), size=3) \
            if self.noise.sigma_trans > 0 else np.zeros(3)
        return Pose(dR @ gt_pose.rotation, gt_pose.translation + dt)

    def register(self, frame, depth, mask: BinaryMask, model: ObjectModel) -> Pose:
        if mask.count() == 0:
            raise EmptyMask("cannot register from an empty mask")
        gt_mask = self.scene.gt_mask(frame.index)
        gt_pose = self.scene.gt_pose(frame.index)
        try:
            iou = mask_iou(mask, gt_mask)
        except Exception:
            iou = 0.0
        if iou < 0.1:
            raise RegistrationFailed(f"mask IoU {iou:.3f} vs ground truth below 0.1")
        rng = _rng(self.seed, frame.index, 4)
        # poor masks degrade the estimate
        scale = 1.0 + 4.0 * (1.0 - iou)
        return self._noisy_gt(gt_pose, rng, scale=scale)

    def track(self, frame, depth, prev_pose: Pose, model: ObjectModel) -> Pose:
        from .evaluation import add_error
        gt_pose = self.scene.gt_pose(frame.index)
        rng = _rng(self.seed, frame.index, 5)
        visible = self.scene.visible_fraction(frame.index) > 0.0
        if visible and add_error(prev_pose, gt_pose, model) < self.basin_radius:
            return self._noisy_gt(gt_pose, rng)
        # out of basin: silent divergence, a seeded random-walk from the stale pose
        dt = rng.normal(0.0, self.noise.drift_sigma, size=3)
        dR = _random_small_rotation(rng, 0.5)
        return Pose(dR @ prev_pose.rotation, prev_pose.translation + dt)


class ExternalBackend:
    """Client-side adapter speaking the wire protocol to a model server."""

    def __init__(self, descriptor: BackendDescriptor):
        from .protocol import ProtocolClient
        if descriptor.mode != "external-protocol":
            raise ValueError("ExternalBackend requires external-protocol mode")
        self.descriptor = descriptor
        host, _, port = descriptor.endpoint.rpartition(":")
        try:
            self.client = ProtocolClient.connect(host or "127.0.0.1", int(port))
        except OSError as exc:
            raise BackendUnavailable(f"cannot reach {descriptor.endpoint}: {exc}")

    def segment(self, frame, prompt: PointPrompt) -> BinaryMask:
        return self.client.segment(frame.rgb, prompt)

    def match(self, reference, frame) -> list[Correspondence]:
        return self.client.match(reference, frame.rgb)

    def register(self, frame, depth, mask: BinaryMask, model: ObjectModel) -> Pose:
        return self.client.register(frame.rgb, depth, mask, model.id)

    def track(self, frame, depth, prev_pose: Pose, model: ObjectModel) -> Pose:
        return self.client.track(frame.rgb, depth, prev_pose, model.id)
