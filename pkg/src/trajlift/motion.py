"""Pose and motion-matrix representations and elementary pose transforms.

Conventions used throughout the package:

* a 3D pose is an ``(J, 3)`` float array in millimeters,
* a 2D pose is an ``(J, 2)`` float array in normalized image units,
* a pose sequence is an ``(F, J, D)`` array,
* a motion matrix is the ``(F, 3J)`` flattening of a 3D pose sequence with
  column order ``X1 Y1 Z1 X2 Y2 Z2 ...`` (one joint's coordinates stay
  adjacent, frames are rows).

All operations are pure functions over immutable inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class SkeletonConfig:
    """Joint naming, root joint, and left/right pairing for mirror flips."""

    joint_names: tuple[str, ...]
    root_index: int
    lr_pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(
            self, "lr_pairs", tuple((int(a), int(b)) for a, b in self.lr_pairs)
        )
        j = len(self.joint_names)
        if j < 1:
            raise ValueError("skeleton needs at least one joint")
        if not 0 <= self.root_index < j:
            raise ValueError(f"root_index {self.root_index} outside [0, {j})")
        seen = set()
        for left, right in self.lr_pairs:
            for idx in (left, right):
                if not 0 <= idx < j:
                    raise ValueError(f"pair index {idx} outside [0, {j})")
                if idx in seen:
                    raise ValueError(f"joint {idx} appears in more than one pair")
                seen.add(idx)
            if left == right:
                raise ValueError(f"joint {left} paired with itself")
        if self.root_index in seen:
            raise ValueError("root joint must not belong to a left/right pair")

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)


#: 17-joint skeleton covering the common motion-capture joint subset.
H36M_JOINT_NAMES = (
    "hip",
    "r_hip", "r_knee", "r_ankle",
    "l_hip", "l_knee", "l_ankle",
    "spine", "thorax", "neck", "head",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist",
)


def default_skeleton() -> SkeletonConfig:
    """The 17-joint skeleton shipped with the package (root = hip)."""
    return SkeletonConfig(
        joint_names=H36M_JOINT_NAMES,
        root_index=0,
        lr_pairs=((4, 1), (5, 2), (6, 3), (11, 14), (12, 15), (13, 16)),
    )


def motion_matrix_from_poses(poses) -> np.ndarray:
    """Stack a 3D pose sequence into an (F, 3J) motion matrix.

    ``poses`` is an (F, J, 3) array or a sequence of (J, 3) poses sharing J.
    Element (f, 3j + c) is coordinate c of joint j at frame f.
    """
    poses = list(np.asarray(p, dtype=float) for p in poses)
    if len(poses) == 0:
        raise DimensionError("need at least one pose")
    shape = poses[0].shape
    if len(shape) != 2 or shape[1] != 3:
        raise DimensionError(f"pose must have shape (J, 3), got {shape}")
    for f, pose in enumerate(poses):
        if pose.shape != shape:
            raise DimensionError(
                f"frame {f} has shape {pose.shape}, expected {shape}"
            )
    return np.stack(poses).reshape(len(poses), shape[0] * 3)


def poses_from_motion_matrix(motion: np.ndarray) -> np.ndarray:
    """Inverse of :func:`motion_matrix_from_poses`; returns (F, J, 3)."""
    motion = np.asarray(motion, dtype=float)
    if motion.ndim != 2:
        raise DimensionError(f"motion matrix must be 2-D, got {motion.ndim}-D")
    frames, cols = motion.shape
    if cols % 3 != 0:
        raise DimensionError(f"column count {cols} is not a multiple of 3")
    return motion.reshape(frames, cols // 3, 3)


def root_align(pose: np.ndarray, skeleton: SkeletonConfig) -> np.ndarray:
    """Translate a (J, 3) pose so the root joint sits at the origin."""
    pose = np.asarray(pose, dtype=float)
    if pose.ndim != 2 or pose.shape[0] != skeleton.num_joints:
        raise DimensionError(
            f"pose shape {pose.shape} does not match skeleton J={skeleton.num_joints}"
        )
    return pose - pose[skeleton.root_index]


def root_align_sequence(seq: np.ndarray, skeleton: SkeletonConfig) -> np.ndarray:
    """Per-frame root alignment of an (F, J, 3) pose sequence."""
    seq = np.asarray(seq, dtype=float)
    if seq.ndim != 3 or seq.shape[1] != skeleton.num_joints:
        raise DimensionError(
            f"sequence shape {seq.shape} does not match skeleton J={skeleton.num_joints}"
        )
    return seq - seq[:, skeleton.root_index : skeleton.root_index + 1, :]


def flip_pose_sequence(seq: np.ndarray, skeleton: SkeletonConfig) -> np.ndarray:
    """Mirror a pose sequence horizontally.

    Negates the first coordinate (u or X) of every joint, then swaps the
    joints of each left/right pair. Works on (F, J, 2) and (F, J, 3)
    sequences and on single (J, D) poses; an involution in all cases.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.shape[-2] != skeleton.num_joints:
        raise DimensionError(
            f"sequence has {seq.shape[-2]} joints, skeleton has {skeleton.num_joints}"
        )
    if seq.shape[-1] not in (2, 3):
        raise DimensionError(f"last axis must be 2 or 3, got {seq.shape[-1]}")
    out = seq.copy()
    out[..., 0] = -out[..., 0]
    for left, right in skeleton.lr_pairs:
        out[..., left, :], out[..., right, :] = (
            out[..., right, :].copy(),
            out[..., left, :].copy(),
        )
    return out


def flip_motion_matrix(
    flat: np.ndarray, skeleton: SkeletonConfig, dims: int
) -> np.ndarray:
    """:func:`flip_pose_sequence` for flattened (F, J*dims) sequences."""
    flat = np.asarray(flat, dtype=float)
    if flat.ndim != 2 or flat.shape[1] != skeleton.num_joints * dims:
        raise DimensionError(
            f"expected shape (F, {skeleton.num_joints * dims}), got {flat.shape}"
        )
    seq = flat.reshape(flat.shape[0], skeleton.num_joints, dims)
    return flip_pose_sequence(seq, skeleton).reshape(flat.shape)
