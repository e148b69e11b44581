"""Rigid-body transforms, pinhole projection, and object-model handling.

Units are meters for 3D quantities and pixels for image quantities.
All types are immutable after construction and all functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import BehindCamera, EmptyModel, NonPositiveDepth, ParseError

_ORTHO_TOL = 1e-6

# Exhaustive pairwise search up to this many points; convex-hull pre-filter above.
_DIAMETER_EXHAUSTIVE_LIMIT = 10_000


@dataclass(frozen=True)
class Pose:
    """SE(3) rigid transform: x_cam = R @ x + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if np.abs(R @ R.T - np.eye(3)).max() > _ORTHO_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation determinant is not +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """self applied after other: (self * other)(x) = self(other(x))."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def invert(self) -> "Pose":
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one point (shape (3,)) or many (shape (N, 3))."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside image bounds")


@dataclass(frozen=True)
class ObjectModel:
    """3D point set with its exact maximum pairwise diameter cached."""

    points: np.ndarray
    max_diameter: float = field(default=None)
    id: str = "model"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if pts.shape[0] == 0:
            raise EmptyModel("object model has no points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.max_diameter is None:
            object.__setattr__(self, "max_diameter", max_diameter(pts))

    @property
    def center(self) -> np.ndarray:
        return self.points.mean(axis=0)


def transform_point(pose: Pose, p) -> np.ndarray:
    """R @ p + t."""
    return pose.apply(np.asarray(p, dtype=np.float64).reshape(3))


def project_point(intr: CameraIntrinsics, p_cam) -> np.ndarray:
    """Pinhole projection of a camera-frame point; may land outside the image."""
    x, y, z = np.asarray(p_cam, dtype=np.float64).reshape(3)
    if z <= 0:
        raise NonPositiveDepth(f"cannot project point with depth {z}")
    return np.array([intr.fx * x / z + intr.cx, intr.fy * y / z + intr.cy])


def project_points(intr: CameraIntrinsics, pts_cam: np.ndarray) -> np.ndarray:
    """Vectorized projection; every point must have positive depth."""
    pts = np.asarray(pts_cam, dtype=np.float64).reshape(-1, 3)
    z = pts[:, 2]
    if np.any(z <= 0):
        raise NonPositiveDepth("point set contains non-positive depths")
    return np.column_stack([intr.fx * pts[:, 0] / z + intr.cx,
                            intr.fy * pts[:, 1] / z + intr.cy])


def max_diameter(points) -> float:
    """Exact maximum pairwise distance.

    Exhaustive for small point sets; for large ones the diameter is attained
    on the convex hull, so hull vertices are pre-filtered first. Never
    approximates: downstream loss thresholds scale with this value.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise EmptyModel("cannot compute diameter of an empty point set")
    if pts.shape[0] == 1:
        return 0.0
    if pts.shape[0] > _DIAMETER_EXHAUSTIVE_LIMIT:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass  # degenerate (coplanar/collinear) set: fall through exhaustive
    best = 0.0
    # Row-blocked pairwise scan keeps memory bounded for hulls with many vertices.
    block = 1024
    for i in range(0, pts.shape[0], block):
        d2 = np.sum((pts[i:i + block, None, :] - pts[None, :, :]) ** 2, axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


def silhouette_points(model: ObjectModel, pose: Pose, intr: CameraIntrinsics) -> np.ndarray:
    """Project all model points with positive depth; raises if none remain."""
    cam = pose.apply(model.points)
    visible = cam[:, 2] > 0
    if not np.any(visible):
        raise BehindCamera("all model points behind the camera")
    return project_points(intr, cam[visible])


def load_model(path, model_id=None) -> ObjectModel:
    """Load an ObjectModel from an ASCII PLY vertex list or an XYZ text file."""
    path = str(path)
    with open(path, "rb") as f:
        head = f.read(4)
    if head[:3] == b"ply":
        pts = _load_ply_ascii(path)
    else:
        pts = _load_xyz(path)
    if len(pts) == 0:
        raise EmptyModel(f"{path}: no vertices")
    name = model_id if model_id is not None else path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return ObjectModel(points=np.array(pts, dtype=np.float64), id=name)


def _load_ply_ascii(path):
    with open(path, "r", errors="replace") as f:
        lines = f.readlines()
    n_vertex = None
    header_end = None
    for i, line in enumerate(lines):
        tok = line.strip().split()
        if i == 1 and tok[:2] != ["format", "ascii"]:
            raise ParseError("only ASCII PLY is supported", line=i + 1)
        if tok[:2] == ["element", "vertex"]:
            try:
                n_vertex = int(tok[2])
            except (IndexError, ValueError):
                raise ParseError("malformed vertex element", line=i + 1)
        if tok == ["end_header"]:
            header_end = i
            break
    if n_vertex is None or header_end is None:
        raise ParseError("PLY header missing vertex element or end_header", line=len(lines))
    pts = []
    for i in range(header_end + 1, header_end + 1 + n_vertex):
        if i >= len(lines):
            raise ParseError("unexpected end of file in vertex list", line=len(lines))
        tok = lines[i].split()
        try:
            pts.append([float(tok[0]), float(tok[1]), float(tok[2])])
        except (IndexError, ValueError):
            raise ParseError("malformed vertex", line=i + 1)
    return pts


def _load_xyz(path):
    pts = []
    with open(path, "r", errors="replace") as f:
        for lineno, line in enumerate(f, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            tok = body.split()
            try:
                pts.append([float(tok[0]), float(tok[1]), float(tok[2])])
            except (IndexError, ValueError):
                raise ParseError("malformed XYZ line", line=lineno)
    return pts
