"""Synthetic scene generation: ground-truth trajectories, silhouette masks,
and scripted adversarial events (occlusion, exit, teleport).

Output layout per scene directory:
    frames/frame_%06d.ppm   flat-shaded RGB with seeded noise texture
    masks/mask_%06d.pgm     ground-truth binary mask
    depth/depth_%06d.pgm    16-bit depth in millimeters
    gt.jsonl                per-frame index, timestamp, R, t, visible_fraction
    script.json             the generating script
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.transform import Rotation, Slerp

from . import imageio
from .errors import BehindCamera, ScriptError
from .geometry import CameraIntrinsics, ObjectModel, Pose, project_points
from .mask import BinaryMask

_EVENT_KINDS = ("occlusion", "exit", "teleport")


@dataclass(frozen=True)
class SceneEvent:
    kind: str
    start: float
    end: float
    params: dict = field(default_factory=dict)

    def active(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class SceneScript:
    model_ref: str
    intrinsics: CameraIntrinsics
    fps: float
    duration: float
    trajectory: list  # keyframes: (time, position[3], rotvec[3])
    events: list = field(default_factory=list)

    def __post_init__(self):
        times = [k[0] for k in self.trajectory]
        if not times:
            raise ScriptError("trajectory needs at least one keyframe")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScriptError("keyframe times must be strictly increasing")
        for ev in self.events:
            if ev.kind not in _EVENT_KINDS:
                raise ScriptError(f"unknown event kind {ev.kind!r}")
            if not (0 <= ev.start <= ev.end <= self.duration):
                raise ScriptError(
                    f"event {ev.kind} [{ev.start}, {ev.end}] outside scene duration")

    @property
    def n_frames(self) -> int:
        return int(round(self.fps * self.duration))

    @staticmethod
    def from_dict(d: dict) -> "SceneScript":
        intr = CameraIntrinsics(**d["intrinsics"])
        traj = [(float(k["time"]), np.asarray(k["position"], dtype=np.float64),
                 np.asarray(k.get("rotvec", [0.0, 0.0, 0.0]), dtype=np.float64))
                for k in d["trajectory"]]
        events = [SceneEvent(kind=e["kind"], start=float(e["start"]),
                             end=float(e["end"]), params=e.get("params", {}))
                  for e in d.get("events", [])]
        return SceneScript(model_ref=d["model"], intrinsics=intr,
                           fps=float(d["fps"]), duration=float(d["duration"]),
                           trajectory=traj, events=events)

    @staticmethod
    def load(path) -> "SceneScript":
        with open(path) as f:
            return SceneScript.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return {
            "model": self.model_ref,
            "intrinsics": {"fx": self.intrinsics.fx, "fy": self.intrinsics.fy,
                           "cx": self.intrinsics.cx, "cy": self.intrinsics.cy,
                           "width": self.intrinsics.width,
                           "height": self.intrinsics.height},
            "fps": self.fps,
            "duration": self.duration,
            "trajectory": [{"time": t, "position": list(map(float, p)),
                            "rotvec": list(map(float, r))}
                           for t, p, r in self.trajectory],
            "events": [{"kind": e.kind, "start": e.start, "end": e.end,
                        "params": e.params} for e in self.events],
        }


@dataclass(frozen=True)
class SceneFrame:
    index: int
    timestamp: float
    gt_pose: Pose
    gt_mask: BinaryMask
    rgb: np.ndarray
    depth: np.ndarray
    visible_fraction: float


def _interpolate_pose(script: SceneScript, t: float) -> Pose:
    keys = script.trajectory
    if len(keys) == 1 or t <= keys[0][0]:
        return Pose(Rotation.from_rotvec(keys[0][2]).as_matrix(), keys[0][1])
    if t >= keys[-1][0]:
        return Pose(Rotation.from_rotvec(keys[-1][2]).as_matrix(), keys[-1][1])
    times = np.array([k[0] for k in keys])
    i = int(np.searchsorted(times, t, side="right")) - 1
    t0, p0, r0 = keys[i]
    t1, p1, r1 = keys[i + 1]
    w = (t - t0) / (t1 - t0)
    pos = (1 - w) * p0 + w * p1
    rots = Rotation.from_rotvec([r0, r1])
    rot = Slerp([t0, t1], rots)(t).as_matrix()
    return Pose(rot, pos)


def _hull_fill(px: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    """Fill pixel centers inside the convex hull of projected points."""
    h, w = intr.height, intr.width
    out = np.zeros((h, w), dtype=np.uint8)
    try:
        hull = ConvexHull(px)
        verts = px[hull.vertices]  # counter-clockwise order
    except QhullError:
        # degenerate projections (collinear): mark the points themselves
        cols = np.clip(np.round(px[:, 0]).astype(int), 0, w - 1)
        rows = np.clip(np.round(px[:, 1]).astype(int), 0, h - 1)
        out[rows, cols] = 1
        return out
    c0 = max(int(np.floor(verts[:, 0].min())), 0)
    c1 = min(int(np.ceil(verts[:, 0].max())), w - 1)
    r0 = max(int(np.floor(verts[:, 1].min())), 0)
    r1 = min(int(np.ceil(verts[:, 1].max())), h - 1)
    if c1 < c0 or r1 < r0:
        return out
    cols, rows = np.meshgrid(np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
    inside = np.ones(cols.shape, dtype=bool)
    n = verts.shape[0]
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        cross = (bx - ax) * (rows - ay) - (by - ay) * (cols - ax)
        inside &= cross >= -1e-9
    out[r0:r1 + 1, c0:c1 + 1] = inside.astype(np.uint8)
    return out


def render_silhouette(model: ObjectModel, pose: Pose,
                      intr: CameraIntrinsics) -> BinaryMask:
    """Filled convex hull of the projected visible model points."""
    cam = pose.apply(model.points)
    vis = cam[:, 2] > 0
    if not np.any(vis):
        raise BehindCamera("object entirely behind the camera")
    px = project_points(intr, cam[vis])
    return BinaryMask(_hull_fill(px, intr))


def _apply_occlusion(data: np.ndarray, params: dict) -> np.ndarray:
    out = data.copy()
    if "rect" in params:
        x, y, w, h = (int(v) for v in params["rect"])
        out[y:y + h, x:x + w] = 0
        return out
    frac = float(params.get("fraction", 0.5))
    col_counts = out.sum(axis=0, dtype=np.int64)
    total = int(col_counts.sum())
    if total == 0:
        return out
    cum = np.cumsum(col_counts)
    cut = int(np.searchsorted(cum, frac * total))
    out[:, :cut + 1] = 0
    return out


def generate(script: SceneScript, seed: int, model: ObjectModel) -> list[SceneFrame]:
    """Render every frame of a scripted scene; pure in (script, seed)."""
    intr = script.intrinsics
    rng = np.random.default_rng([seed, 0xC0FFEE])
    noise_tex = rng.integers(-30, 31, size=(intr.height, intr.width),
                             dtype=np.int16)
    frames = []
    teleport_offset = np.zeros(3)
    applied_teleports = set()
    for i in range(script.n_frames):
        ts = i / script.fps
        for k, ev in enumerate(script.events):
            if ev.kind == "teleport" and ts >= ev.start and k not in applied_teleports:
                teleport_offset = teleport_offset + np.asarray(
                    ev.params.get("offset", [0, 0, 0]), dtype=np.float64)
                applied_teleports.add(k)
        base = _interpolate_pose(script, ts)
        pose = Pose(base.rotation, base.translation + teleport_offset)
        try:
            full = render_silhouette(model, pose, intr)
        except BehindCamera:
            full = BinaryMask.zeros(intr.width, intr.height)
        full_count = full.count()
        data = full.data.copy()
        for ev in script.events:
            if not ev.active(ts):
                continue
            if ev.kind == "exit":
                data[:] = 0
            elif ev.kind == "occlusion":
                data = _apply_occlusion(data, ev.params)
        mask = BinaryMask(data)
        visible = mask.count() / full_count if full_count else 0.0

        rgb = np.full((intr.height, intr.width, 3), 60, dtype=np.int16)
        obj = mask.data.astype(bool)
        rgb[obj] = 180 + noise_tex[obj][:, None]
        rgb = np.clip(rgb, 0, 255).astype(np.uint8)

        depth_mm = np.zeros((intr.height, intr.width), dtype=np.uint16)
        z_mm = int(round(max(pose.apply(model.center)[2], 0) * 1000))
        depth_mm[obj] = np.uint16(min(z_mm, 65535))

        frames.append(SceneFrame(index=i, timestamp=ts, gt_pose=pose,
                                 gt_mask=mask, rgb=rgb, depth=depth_mm,
                                 visible_fraction=float(visible)))
    return frames


def write_scene(frames: list[SceneFrame], script: SceneScript, out_dir):
    out_dir = str(out_dir)
    for sub in ("frames", "masks", "depth"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    with open(os.path.join(out_dir, "gt.jsonl"), "w") as gt:
        for fr in frames:
            imageio.write_ppm(os.path.join(out_dir, "frames",
                                           f"frame_{fr.index:06d}.ppm"), fr.rgb)
            imageio.write_pgm(os.path.join(out_dir, "masks",
                                           f"mask_{fr.index:06d}.pgm"),
                              fr.gt_mask.data * np.uint8(255))
            imageio.write_pgm(os.path.join(out_dir, "depth",
                                           f"depth_{fr.index:06d}.pgm"), fr.depth)
            rec = {"frame": fr.index, "timestamp": fr.timestamp,
                   "R": [float(x) for x in fr.gt_pose.rotation.ravel()],
                   "t": [float(x) for x in fr.gt_pose.translation],
                   "visible_fraction": fr.visible_fraction}
            gt.write(json.dumps(rec) + "\n")
    with open(os.path.join(out_dir, "script.json"), "w") as f:
        json.dump(script.to_dict(), f, indent=2)


class LoadedScene:
    """Lazy reader over a written scene directory; also the ground-truth
    provider handed to the simulated backends."""

    def __init__(self, scene_dir):
        self.dir = str(scene_dir)
        self.script = SceneScript.load(os.path.join(self.dir, "script.json"))
        self.records = []
        with open(os.path.join(self.dir, "gt.jsonl")) as f:
            for line in f:
                self.records.append(json.loads(line))
        self._mask_cache = {}

    def __len__(self):
        return len(self.records)

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return self.script.intrinsics

    def timestamp(self, i) -> float:
        return float(self.records[i]["timestamp"])

    def gt_pose(self, i) -> Pose:
        r = self.records[i]
        return Pose(np.asarray(r["R"]).reshape(3, 3), np.asarray(r["t"]))

    def visible_fraction(self, i) -> float:
        return float(self.records[i]["visible_fraction"])

    def gt_mask(self, i) -> BinaryMask:
        if i not in self._mask_cache:
            img = imageio.read_pgm(
                os.path.join(self.dir, "masks", f"mask_{i:06d}.pgm"))
            self._mask_cache[i] = BinaryMask(img)
        return self._mask_cache[i]

    def rgb(self, i) -> np.ndarray:
        return imageio.read_ppm(
            os.path.join(self.dir, "frames", f"frame_{i:06d}.ppm"))

    def depth(self, i) -> np.ndarray:
        return imageio.read_pgm(
            os.path.join(self.dir, "depth", f"depth_{i:06d}.pgm"))
