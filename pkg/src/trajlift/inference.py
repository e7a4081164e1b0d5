"""Whole-video 3D estimation with overlapping fixed-length windows."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bases import TrajectoryBasis
from .errors import DimensionError, ParameterError
from .motion import SkeletonConfig, flip_motion_matrix
from .network import NetworkParams, forward


@dataclass(frozen=True)
class SlidingConfig:
    frames: int
    step: int = 5
    flip_average: bool = True

    def __post_init__(self):
        if not 1 <= self.step <= self.frames:
            raise ParameterError(
                f"step must be in [1, {self.frames}], got {self.step}"
            )


def window_starts(video_len: int, cfg: SlidingConfig) -> list[int]:
    """Start indices of length-F windows at stride q, covering every frame.

    When (L - F) is not a multiple of q, a final window clamped to L - F is
    appended so the tail frames are covered.
    """
    if video_len < cfg.frames:
        raise DimensionError(
            f"video has {video_len} frames, window needs {cfg.frames}"
        )
    starts = list(range(0, video_len - cfg.frames + 1, cfg.step))
    if starts[-1] != video_len - cfg.frames:
        starts.append(video_len - cfg.frames)
    return starts


def _predict_window(params, basis, window2d, skeleton, flip_average):
    pred = forward(params, basis, window2d).poses3d
    if flip_average:
        flipped_in = flip_motion_matrix(window2d, skeleton, dims=2)
        flipped_out = forward(params, basis, flipped_in).poses3d
        pred = 0.5 * (pred + flip_motion_matrix(flipped_out, skeleton, dims=3))
    return pred


def sliding_infer(
    params: NetworkParams,
    basis: TrajectoryBasis,
    video2d: np.ndarray,
    skeleton: SkeletonConfig,
    cfg: SlidingConfig,
) -> np.ndarray:
    """Estimate (L, 3J) poses for an (L, 2J) video with L >= F.

    Each frame's estimate is the arithmetic mean over all windows covering
    it; with ``flip_average`` every window is also evaluated mirrored and
    the two estimates are averaged. Runs the network in eval mode.
    """
    video2d = np.asarray(video2d, dtype=float)
    if video2d.ndim != 2 or video2d.shape[1] != 2 * skeleton.num_joints:
        raise DimensionError(
            f"video shape {video2d.shape} does not match J={skeleton.num_joints}"
        )
    if params.config.frames != cfg.frames:
        raise DimensionError("sliding window length must match the model")
    length = video2d.shape[0]
    starts = window_starts(length, cfg)
    params.mode = "eval"
    accum = np.zeros((length, 3 * skeleton.num_joints))
    counts = np.zeros(length)
    for s in starts:
        pred = _predict_window(
            params, basis, video2d[s:s + cfg.frames], skeleton, cfg.flip_average
        )
        accum[s:s + cfg.frames] += pred
        counts[s:s + cfg.frames] += 1.0
    return accum / counts[:, None]
