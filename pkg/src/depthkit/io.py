"""Plain-text and image file formats. See docs/formats.md for the grammar.

All arrays are row-major (row = image y). Tools that store column-major data
(MATLAB, some HDF5 writers) need a transpose on the way in or out.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .depthmap import DISP_SCALE, INVALID_DISPARITY, DepthMap, DisparityMap
from .geometry import CameraIntrinsics, Pose, Quaternion

log = logging.getLogger(__name__)

#: depth files store round(depth * 256); 0 means "no data"
DEPTH_UNITS_PER_METER = 256
MAX_DEPTH_M = 65535 / DEPTH_UNITS_PER_METER


class FormatError(ValueError):
    """Malformed input file; message carries path and line number."""


def _content_lines(path):
    """Yield (line_number, fields) for non-blank, non-comment lines."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _float(token: str, path, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"{path}:{lineno}: not a number: {token!r}") from None
    if not math.isfinite(value):
        raise FormatError(f"{path}:{lineno}: non-finite value {token!r}")
    return value


def load_point_cloud(path) -> np.ndarray:
    """Whitespace-separated ``x y z`` per line -> (N, 3) float array."""
    rows = []
    for lineno, fields in _content_lines(path):
        if len(fields) != 3:
            raise FormatError(f"{path}:{lineno}: expected 3 fields 'x y z', got {len(fields)}")
        rows.append([_float(f, path, lineno) for f in fields])
    return np.array(rows, dtype=float).reshape(-1, 3)


def save_point_cloud(path, points) -> None:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# x y z (meters)\n")
        for x, y, z in pts:
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")


@dataclass(frozen=True)
class PoseRecord:
    frame_id: str
    pose: Pose

    @property
    def translation(self):
        return self.pose.translation

    @property
    def quaternion(self) -> Quaternion:
        return self.pose.rotation


def load_pose(path) -> PoseRecord:
    """First content line: ``id tx ty tz qw qx qy qz``."""
    for lineno, fields in _content_lines(path):
        if len(fields) != 8:
            raise FormatError(f"{path}:{lineno}: expected 8 fields 'id tx ty tz qw qx qy qz', got {len(fields)}")
        t = [_float(f, path, lineno) for f in fields[1:4]]
        q = [_float(f, path, lineno) for f in fields[4:8]]
        norm = math.sqrt(sum(c * c for c in q))
        if norm == 0:
            raise FormatError(f"{path}:{lineno}: zero quaternion")
        if abs(norm - 1.0) > 1e-6:
            log.warning("%s:%d: quaternion norm %.9g, normalizing", path, lineno, norm)
        return PoseRecord(fields[0], Pose(Quaternion(*q), tuple(t)))
    raise FormatError(f"{path}: no pose line")


def save_pose(path, record: PoseRecord) -> None:
    t, q = record.pose.translation, record.pose.rotation
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# id tx ty tz qw qx qy qz\n")
        fh.write(" ".join([record.frame_id, *(repr(float(c)) for c in t), *(repr(float(c)) for c in (q.w, q.x, q.y, q.z))]) + "\n")


def parse_key_values(path) -> list[tuple[int, str, list[str]]]:
    """``key value...`` lines as (line_number, key, values)."""
    return [(lineno, fields[0], fields[1:]) for lineno, fields in _content_lines(path)]


INTRINSIC_KEYS = ("focal", "cx", "cy", "height", "width", "baseline")


def intrinsics_from_mapping(values: dict, path="<intrinsics>") -> CameraIntrinsics:
    missing = [k for k in ("focal", "height", "width", "baseline") if k not in values]
    if missing:
        raise FormatError(f"{path}: missing intrinsics keys {missing}")
    height, width = values["height"], values["width"]
    if height != int(height) or width != int(width):
        raise FormatError(f"{path}: height and width must be integers")
    return CameraIntrinsics(
        focal=values["focal"],
        height=int(height),
        width=int(width),
        baseline=values["baseline"],
        cx=values.get("cx"),
        cy=values.get("cy"),
    )


def load_intrinsics(path) -> CameraIntrinsics:
    values = {}
    for lineno, key, rest in parse_key_values(path):
        if key not in INTRINSIC_KEYS:
            raise FormatError(f"{path}:{lineno}: unknown key {key!r}")
        if len(rest) != 1:
            raise FormatError(f"{path}:{lineno}: {key} takes one value")
        values[key] = _float(rest[0], path, lineno)
    return intrinsics_from_mapping(values, path)


def save_intrinsics(path, intr: CameraIntrinsics) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in INTRINSIC_KEYS:
            value = getattr(intr, key)
            text = str(value) if key in ("height", "width") else repr(float(value))
            fh.write(f"{key} {text}\n")


# ---------------------------------------------------------------- images


def read_gray(path) -> np.ndarray:
    """8-bit gray PGM/PNG -> float array in [0, 1]. RGB input is rejected."""
    with Image.open(path) as im:
        if im.mode != "L":
            raise FormatError(f"{path}: expected 8-bit gray image, got mode {im.mode}")
        return np.asarray(im, dtype=np.float64) / 255.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(np.asarray(img, dtype=float) * 255.0 + 0.5), 0, 255).astype(np.uint8)


def write_gray(path, img: np.ndarray) -> None:
    """Float [0, 1] or uint8 gray image to PGM/PNG."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    if arr.ndim != 2:
        raise ValueError(f"gray image must be 2-D, got {arr.shape}")
    Image.fromarray(arr).save(path)


def read_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode != "RGB":
            raise FormatError(f"{path}: expected RGB image, got mode {im.mode}")
        return np.asarray(im, dtype=np.uint8).copy()


def write_rgb(path, rgb: np.ndarray) -> None:
    arr = np.asarray(rgb, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"RGB image must be (H, W, 3), got {arr.shape}")
    Image.fromarray(arr).save(path)


def read_uint16(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("I;16", "I"):
            raise FormatError(f"{path}: expected 16-bit single-channel image, got mode {im.mode}")
        arr = np.asarray(im)
    if arr.min(initial=0) < 0 or arr.max(initial=0) > 65535:
        raise FormatError(f"{path}: values outside 16-bit range")
    return arr.astype(np.uint16)


def write_uint16(path, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    if arr.dtype != np.uint16:
        raise ValueError(f"expected uint16 array, got {arr.dtype}")
    Image.fromarray(arr).save(path)


def encode_depth(depth_map: DepthMap) -> np.ndarray:
    """Meters -> uint16 at 1/256 m; invalid -> 0, valid depths clamp to [1, 65535]."""
    stored = np.floor(depth_map.values * DEPTH_UNITS_PER_METER + 0.5)
    too_far = depth_map.valid & (stored > 65535)
    if too_far.any():
        log.warning("%d depths beyond %.3f m clamped", int(too_far.sum()), MAX_DEPTH_M)
    stored = np.clip(stored, 1, 65535)
    return np.where(depth_map.valid, stored, 0).astype(np.uint16)


def decode_depth(stored: np.ndarray) -> DepthMap:
    stored = np.asarray(stored, dtype=np.uint16)
    valid = stored > 0
    return DepthMap(stored.astype(np.float64) / DEPTH_UNITS_PER_METER, valid)


def write_depth(path, depth_map: DepthMap) -> None:
    write_uint16(path, encode_depth(depth_map))


def read_depth(path) -> DepthMap:
    return decode_depth(read_uint16(path))


def write_disparity(path, disp: DisparityMap) -> None:
    """Disparity as uint16: raw 1/16 px fixed point, invalid -> 0.

    Only non-negative disparity ranges are representable.
    """
    if disp.min_disparity < 0:
        raise ValueError("disparity files need min_disparity >= 0")
    stored = np.where(disp.valid, disp.raw.astype(np.int32), 0)
    write_uint16(path, stored.astype(np.uint16))


def read_disparity(path, min_disparity: int = 0, num_disparities: int = 64) -> DisparityMap:
    """Inverse of :func:`write_disparity`; a zero disparity reads back as invalid."""
    stored = read_uint16(path).astype(np.int32)
    raw = np.where(stored > 0, stored, INVALID_DISPARITY).astype(np.int16)
    return DisparityMap(raw, min_disparity, num_disparities)


__all__ = [
    "DISP_SCALE",
    "FormatError",
    "PoseRecord",
    "decode_depth",
    "encode_depth",
    "load_intrinsics",
    "load_point_cloud",
    "load_pose",
    "read_depth",
    "read_disparity",
    "read_gray",
    "read_rgb",
    "read_uint16",
    "save_intrinsics",
    "save_point_cloud",
    "save_pose",
    "write_depth",
    "write_disparity",
    "write_gray",
    "write_rgb",
    "write_uint16",
]
