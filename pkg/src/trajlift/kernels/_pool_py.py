"""Pure-numpy temporal pooling kernels (fallback backend)."""
import numpy as np

from ..errors import ParameterError


def check_window(window: int, frames: int) -> None:
    if window < 1 or window % 2 == 0:
        raise ParameterError(f"pool window must be odd and >= 1, got {window}")
    if window > frames:
        raise ParameterError(f"pool window {window} exceeds frame count {frames}")


def avg_pool_forward(rows: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with replicate padding.

    ``rows`` is (n, F); each row is pooled independently, output is (n, F).
    """
    rows = np.asarray(rows, dtype=float)
    check_window(window, rows.shape[1])
    half = window // 2
    padded = np.pad(rows, ((0, 0), (half, half)), mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, window, axis=1)
    return windows.sum(axis=2) / window


def avg_pool_backward(grad: np.ndarray, window: int) -> np.ndarray:
    """Adjoint of :func:`avg_pool_forward` (gradient w.r.t. its input)."""
    grad = np.asarray(grad, dtype=float)
    check_window(window, grad.shape[1])
    n, frames = grad.shape
    half = window // 2
    out = np.zeros_like(grad)
    scaled = grad / window
    row_idx = np.arange(n)[:, None]
    for d in range(-half, half + 1):
        target = np.clip(np.arange(frames) + d, 0, frames - 1)
        np.add.at(out, (row_idx, target[None, :]), scaled)
    return out
