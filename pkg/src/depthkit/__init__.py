"""Depth maps from lidar point clouds and rectified stereo pairs."""

from .depthmap import DenseDepthMap, DepthMap, DisparityMap, SparseDepthMap
from .geometry import CameraIntrinsics, Pose, Quaternion
from .lidar_depth import CompletionParams
from .stereo import MatchParams
from .wls import WlsParams

__all__ = [
    "CameraIntrinsics",
    "CompletionParams",
    "DenseDepthMap",
    "DepthMap",
    "DisparityMap",
    "MatchParams",
    "Pose",
    "Quaternion",
    "SparseDepthMap",
    "WlsParams",
]
