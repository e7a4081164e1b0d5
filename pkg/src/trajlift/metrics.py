"""Evaluation protocols: MPJPE, Procrustes-aligned MPJPE, PCK, AUC.

Protocol 1 translates the root joint of both prediction and ground truth
to the origin before measuring joint distances; protocol 2 additionally
fits a per-frame similarity transform (rotation, scale, translation) of
the prediction onto the ground truth. PCK counts a joint as correct when
its error does not exceed the threshold; AUC averages PCK over a 0..150 mm
grid with 5 mm steps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError
from .motion import SkeletonConfig

PCK_DEFAULT_THRESHOLD_MM = 150.0
AUC_DEFAULT_GRID_MM = np.arange(0.0, 150.0 + 2.5, 5.0)


def _as_joint_sequences(pred, gt):
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise DimensionError(f"shape mismatch {pred.shape} vs {gt.shape}")
    if pred.ndim != 2 or pred.shape[1] % 3 != 0:
        raise DimensionError("expected (F, 3J) motion matrices")
    frames = pred.shape[0]
    return pred.reshape(frames, -1, 3), gt.reshape(frames, -1, 3)


def per_frame_errors_p1(pred, gt, skeleton: SkeletonConfig) -> np.ndarray:
    """Protocol-1 per-frame mean joint error in mm, length F."""
    p, g = _as_joint_sequences(pred, gt)
    if p.shape[1] != skeleton.num_joints:
        raise DimensionError(
            f"{p.shape[1]} joints in data, skeleton has {skeleton.num_joints}"
        )
    root = skeleton.root_index
    p = p - p[:, root:root + 1, :]
    g = g - g[:, root:root + 1, :]
    return np.linalg.norm(p - g, axis=2).mean(axis=1)


def mpjpe_p1(pred, gt, skeleton: SkeletonConfig) -> float:
    """Mean per-joint position error after per-frame root alignment."""
    return float(per_frame_errors_p1(pred, gt, skeleton).mean())


def procrustes_align(pred_frame: np.ndarray, gt_frame: np.ndarray) -> np.ndarray:
    """Best-fit similarity transform of one (J, 3) frame onto another.

    Returns s * R @ pred + t minimizing the Frobenius distance to the
    ground-truth frame, with det(R) = +1 enforced (reflections are folded
    into a sign flip on the smallest singular direction).
    """
    pred_frame = np.asarray(pred_frame, dtype=float)
    gt_frame = np.asarray(gt_frame, dtype=float)
    if pred_frame.shape != gt_frame.shape or pred_frame.ndim != 2 \
            or pred_frame.shape[1] != 3:
        raise DimensionError("expected matching (J, 3) point sets")
    mu_p = pred_frame.mean(axis=0)
    mu_g = gt_frame.mean(axis=0)
    p_c = pred_frame - mu_p
    g_c = gt_frame - mu_g
    p_energy = (p_c * p_c).sum()
    if p_energy == 0.0:
        raise NumericError("all prediction points coincide; alignment undefined")
    cov = p_c.T @ g_c
    u, s, vt = np.linalg.svd(cov)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    flip = np.ones(3)
    flip[-1] = d
    rot = vt.T @ np.diag(flip) @ u.T
    scale = (s * flip).sum() / p_energy
    return scale * p_c @ rot.T + mu_g


def mpjpe_p2(pred, gt) -> float:
    """MPJPE after per-frame Procrustes (similarity) alignment."""
    p, g = _as_joint_sequences(pred, gt)
    total = 0.0
    for f in range(p.shape[0]):
        aligned = procrustes_align(p[f], g[f])
        total += np.linalg.norm(aligned - g[f], axis=1).mean()
    return float(total / p.shape[0])


def pck(pred, gt, threshold: float = PCK_DEFAULT_THRESHOLD_MM) -> float:
    """Percentage of joints with error <= threshold (both protocols' raw 3D)."""
    p, g = _as_joint_sequences(pred, gt)
    errors = np.linalg.norm(p - g, axis=2)
    return float((errors <= threshold).mean() * 100.0)


def auc(pred, gt, thresholds=None) -> float:
    """Mean PCK over a grid of thresholds (default 0..150 mm step 5)."""
    if thresholds is None:
        thresholds = AUC_DEFAULT_GRID_MM
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.size == 0:
        raise DimensionError("threshold grid is empty")
    p, g = _as_joint_sequences(pred, gt)
    errors = np.linalg.norm(p - g, axis=2)
    return float(
        np.mean([(errors <= t).mean() * 100.0 for t in thresholds])
    )


@dataclass
class EvalReport:
    mpjpe_p1: float
    mpjpe_p2: float
    pck150: float
    auc: float
    per_frame_errors: np.ndarray

    def to_text(self) -> str:
        return (
            f"mpjpe_p1_mm={repr(self.mpjpe_p1)}\n"
            f"mpjpe_p2_mm={repr(self.mpjpe_p2)}\n"
            f"pck150_percent={repr(self.pck150)}\n"
            f"auc_percent={repr(self.auc)}\n"
        )

    def per_frame_csv(self) -> str:
        lines = ["frame,error_mm"]
        for f, e in enumerate(self.per_frame_errors):
            lines.append(f"{f},{repr(float(e))}")
        return "\n".join(lines) + "\n"


def evaluate(pred, gt, skeleton: SkeletonConfig) -> EvalReport:
    """All metrics at once; per-frame errors follow protocol 1."""
    frame_errors = per_frame_errors_p1(pred, gt, skeleton)
    return EvalReport(
        mpjpe_p1=float(frame_errors.mean()),
        mpjpe_p2=mpjpe_p2(pred, gt),
        pck150=pck(pred, gt),
        auc=auc(pred, gt),
        per_frame_errors=frame_errors,
    )
