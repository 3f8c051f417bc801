"""Quaternions, rigid frame transforms and pinhole projection.

Axis convention (camera frame): z forward, x right, y down. Rotation
matrices act on column vectors and are stored row-major. A ``Pose`` places a
child frame (body, camera) inside its parent frame: ``rotation`` is the
parent-from-child rotation and ``translation`` is the child origin expressed in
the parent frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: points with camera-frame depth at or below this are "behind the camera"
Z_MIN = 1e-6


class InvalidInputError(ValueError):
    """Raised for non-finite or degenerate geometric input."""


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion (w, x, y, z). Normalized on construction."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        comps = np.array([self.w, self.x, self.y, self.z], dtype=float)
        if not np.all(np.isfinite(comps)):
            raise InvalidInputError(f"non-finite quaternion {tuple(comps)}")
        norm = float(np.sqrt(np.sum(comps**2)))
        if norm == 0.0:
            raise InvalidInputError("zero quaternion has no rotation")
        comps = comps / norm
        for name, value in zip("wxyz", comps):
            object.__setattr__(self, name, float(value))

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __neg__(self) -> "Quaternion":
        # already unit length; re-normalizing could perturb the last bit
        neg = object.__new__(Quaternion)
        for name in "wxyz":
            object.__setattr__(neg, name, -getattr(self, name))
        return neg


def quaternion_to_rotation(q: Quaternion) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion (parent-from-child)."""
    w, x, y, z = q.w, q.x, q.y, q.z
    if not np.all(np.isfinite([w, x, y, z])):
        raise InvalidInputError("non-finite quaternion")
    return np.array(
        [
            [1 - 2 * y * y - 2 * z * z, 2 * x * y - 2 * z * w, 2 * x * z + 2 * y * w],
            [2 * x * y + 2 * z * w, 1 - 2 * x * x - 2 * z * z, 2 * y * z - 2 * x * w],
            [2 * x * z - 2 * y * w, 2 * y * z + 2 * x * w, 1 - 2 * x * x - 2 * y * y],
        ]
    )


def rotation_to_quaternion(R: np.ndarray) -> Quaternion:
    """Inverse of :func:`quaternion_to_rotation` (Shepperd's method)."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    if tr > 0:
        s = 2.0 * np.sqrt(tr + 1.0)
        return Quaternion(
            0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s
        )
    i = int(np.argmax(np.diag(R)))
    j, k = (i + 1) % 3, (i + 2) % 3
    s = 2.0 * np.sqrt(1.0 + R[i, i] - R[j, j] - R[k, k])
    v = np.empty(3)
    v[i] = 0.25 * s
    v[j] = (R[j, i] + R[i, j]) / s
    v[k] = (R[k, i] + R[i, k]) / s
    w = (R[k, j] - R[j, k]) / s
    return Quaternion(w, *v)


@dataclass(frozen=True)
class Pose:
    rotation: Quaternion = field(default_factory=Quaternion.identity)
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    _R: np.ndarray = field(init=False, repr=False, compare=False)
    _t: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise InvalidInputError(f"translation must be 3 finite values, got {self.translation!r}")
        object.__setattr__(self, "translation", tuple(float(c) for c in t))
        # cached read-only copies; poses are immutable
        R = quaternion_to_rotation(self.rotation)
        R.flags.writeable = False
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "_R", R)
        object.__setattr__(self, "_t", t)

    @property
    def matrix(self) -> np.ndarray:
        return self._R

    @property
    def t(self) -> np.ndarray:
        return self._t

    def compose(self, child: "Pose") -> "Pose":
        """Pose of ``child`` (given in this pose's frame) in this pose's parent."""
        R = self.matrix @ child.matrix
        t = self.matrix @ child.t + self.t
        return Pose(rotation_to_quaternion(R), tuple(t))


def _as_points(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (3,):
        raise InvalidInputError(f"points must have a trailing axis of length 3, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite point coordinates")
    return arr


def parent_to_child(pose: Pose, p_parent) -> np.ndarray:
    """Express parent-frame point(s) in the child frame: R^T (p - t).

    Accepts a single point of shape (3,) or an (N, 3) array.
    """
    p = _as_points(p_parent)
    # row-vector form of R^T (p - t)
    return (p - pose.t) @ pose.matrix


def child_to_parent(pose: Pose, p_child) -> np.ndarray:
    """Inverse of :func:`parent_to_child`: R p + t."""
    p = _as_points(p_child)
    return p @ pose.matrix.T + pose.t


def global_to_camera(body_pose: Pose, camera_pose: Pose, points_global) -> np.ndarray:
    """Global -> body -> camera, the two-step chain used for lidar points."""
    return parent_to_child(camera_pose, parent_to_child(body_pose, points_global))


def camera_to_global(body_pose: Pose, camera_pose: Pose, points_cam) -> np.ndarray:
    return child_to_parent(body_pose, child_to_parent(camera_pose, points_cam))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics plus stereo baseline.

    ``cx``/``cy`` default to the image center, ``((width-1)/2, (height-1)/2)``.
    """

    focal: float
    height: int
    width: int
    baseline: float
    cx: float | None = None
    cy: float | None = None

    def __post_init__(self):
        if not (self.focal > 0):
            raise InvalidInputError(f"focal must be > 0, got {self.focal}")
        if not (self.baseline > 0):
            raise InvalidInputError(f"baseline must be > 0, got {self.baseline}")
        if self.height <= 0 or self.width <= 0:
            raise InvalidInputError(f"image size must be positive, got {self.height}x{self.width}")
        if self.cx is None:
            object.__setattr__(self, "cx", (self.width - 1) / 2.0)
        if self.cy is None:
            object.__setattr__(self, "cy", (self.height - 1) / 2.0)

    @property
    def principal_point(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    @property
    def image_size(self) -> tuple[int, int]:
        return (self.height, self.width)


def project_points(intr: CameraIntrinsics, p_cam) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized pinhole projection.

    Returns ``(u, v, depth, in_front)``; entries where ``in_front`` is False
    hold NaN for u and v.
    """
    p = np.atleast_2d(_as_points(p_cam))
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    in_front = z > Z_MIN
    safe_z = np.where(in_front, z, 1.0)
    u = np.where(in_front, intr.focal * x / safe_z + intr.cx, np.nan)
    v = np.where(in_front, intr.focal * y / safe_z + intr.cy, np.nan)
    return u, v, z.copy(), in_front


def project_point(intr: CameraIntrinsics, p_cam) -> tuple[float, float, float] | None:
    """Project one camera-frame point; ``None`` means behind the camera."""
    p = _as_points(p_cam)
    if p.shape != (3,):
        raise InvalidInputError("project_point takes a single point; use project_points")
    u, v, z, ok = project_points(intr, p)
    if not ok[0]:
        return None
    return float(u[0]), float(v[0]), float(z[0])


def back_project(intr: CameraIntrinsics, u, v, depth) -> np.ndarray:
    """Pixel coordinates plus depth back to camera-frame points, shape (N, 3)."""
    u, v, depth = (np.asarray(a, dtype=float) for a in (u, v, depth))
    x = (u - intr.cx) * depth / intr.focal
    y = (v - intr.cy) * depth / intr.focal
    return np.stack([x, y, depth], axis=-1)


def random_pose(rng: np.random.Generator, max_translation: float = 10.0) -> Pose:
    """Uniformly random rotation with a bounded random translation."""
    q = rng.normal(size=4)
    return Pose(Quaternion(*q), tuple(rng.uniform(-max_translation, max_translation, size=3)))
