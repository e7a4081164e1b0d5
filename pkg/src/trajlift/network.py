"""Coefficient-regression network with hand-written gradients.

Pipeline (per sample of F frames with J joints, K basis vectors):

1. feature block — repeated Linear-BatchNorm-ReLU-Dropout layers applied
   per frame with shared weights; layers are densely connected (each layer
   sees the block input concatenated with every previous layer's output),
2. temporal average pooling (odd window, replicate padding) smoothing each
   feature channel across frames,
3. a fixed linear map projecting every channel's pooled trajectory onto the
   K basis vectors, scaled by 2/F,
4. regression block — same dense Linear-BatchNorm-ReLU-Dropout structure on
   the concatenated per-channel coefficients,
5. a linear head emitting K x 3J trajectory coefficients, and
6. pose synthesis: poses = theta @ coefficients.

Everything is float64 numpy. ``forward`` never mutates parameters; batch
statistics produced in train mode are returned in the cache and folded into
the running statistics by the training loop.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .bases import TrajectoryBasis
from .errors import DimensionError, NumericError, ParameterError

BN_EPS = 1e-5


@dataclass
class NetworkConfig:
    frames: int
    num_bases: int
    joints: int
    feat_layers: int = 4
    feat_width: int = 256
    feat_dropout: float = 0.25
    reg_layers: int = 5
    reg_width: int = 1024
    reg_dropout: float = 0.5
    pool_window: int = 5
    dense_connections: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.frames < 1 or self.joints < 1:
            raise ParameterError("frames and joints must be >= 1")
        if not 1 <= self.num_bases <= self.frames:
            raise ParameterError(
                f"num_bases must be in [1, {self.frames}], got {self.num_bases}"
            )
        if self.feat_layers < 1 or self.reg_layers < 1:
            raise ParameterError("both blocks need at least one layer")
        if self.feat_width < 1 or self.reg_width < 1:
            raise ParameterError("layer widths must be >= 1")
        for rate in (self.feat_dropout, self.reg_dropout):
            if not 0.0 <= rate < 1.0:
                raise ParameterError(f"dropout rate {rate} outside [0, 1)")
        kernels.check_window(self.pool_window, self.frames)


@dataclass
class LinearParams:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray    # (fan_out,)


@dataclass
class NormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray


@dataclass
class LayerParams:
    linear: LinearParams
    norm: NormParams


@dataclass
class NetworkParams:
    config: NetworkConfig
    feature: list[LayerParams]
    regression: list[LayerParams]
    head: LinearParams
    mode: str = "train"  # "train" or "eval"


class ForwardResult(NamedTuple):
    coeffs: np.ndarray   # (..., K, 3J)
    poses3d: np.ndarray  # (..., F, 3J)
    cache: dict


def _block_in_widths(x_width: int, width: int, layers: int, dense: bool):
    if dense:
        return [x_width + i * width for i in range(layers)]
    return [x_width] + [width] * (layers - 1)


def _head_in_width(cfg: NetworkConfig) -> int:
    """With dense connections the head reads the whole regression stack."""
    trans_width = cfg.feat_width * cfg.num_bases
    if cfg.dense_connections:
        return trans_width + cfg.reg_layers * cfg.reg_width
    return cfg.reg_width


def _init_layer(rng, fan_in: int, fan_out: int) -> LayerParams:
    bound = 1.0 / np.sqrt(fan_in)
    return LayerParams(
        linear=LinearParams(
            weight=rng.uniform(-bound, bound, size=(fan_in, fan_out)),
            bias=np.zeros(fan_out),
        ),
        norm=NormParams(
            gamma=np.ones(fan_out),
            beta=np.zeros(fan_out),
            running_mean=np.zeros(fan_out),
            running_var=np.ones(fan_out),
        ),
    )


def init_network(cfg: NetworkConfig) -> NetworkParams:
    """Seeded parameter tree: uniform fan-in-scaled weights, zero biases."""
    rng = np.random.default_rng(cfg.seed)
    in2d = 2 * cfg.joints
    feature = [
        _init_layer(rng, w, cfg.feat_width)
        for w in _block_in_widths(in2d, cfg.feat_width, cfg.feat_layers,
                                  cfg.dense_connections)
    ]
    trans_width = cfg.feat_width * cfg.num_bases
    regression = [
        _init_layer(rng, w, cfg.reg_width)
        for w in _block_in_widths(trans_width, cfg.reg_width, cfg.reg_layers,
                                  cfg.dense_connections)
    ]
    head_in = _head_in_width(cfg)
    head_out = cfg.num_bases * 3 * cfg.joints
    bound = 1.0 / np.sqrt(head_in)
    head = LinearParams(
        weight=rng.uniform(-bound, bound, size=(head_in, head_out)),
        bias=np.zeros(head_out),
    )
    return NetworkParams(cfg, feature, regression, head, mode="train")


def named_learnables(params: NetworkParams):
    """(name, array) pairs of every trainable tensor, in declared order."""
    out = []
    for prefix, layers in (("feature", params.feature),
                           ("regression", params.regression)):
        for i, lp in enumerate(layers):
            out.append((f"{prefix}.{i}.weight", lp.linear.weight))
            out.append((f"{prefix}.{i}.bias", lp.linear.bias))
            out.append((f"{prefix}.{i}.gamma", lp.norm.gamma))
            out.append((f"{prefix}.{i}.beta", lp.norm.beta))
    out.append(("head.weight", params.head.weight))
    out.append(("head.bias", params.head.bias))
    return out


def named_arrays(params: NetworkParams):
    """Learnables plus batch-norm running statistics (checkpoint order)."""
    out = []
    for prefix, layers in (("feature", params.feature),
                           ("regression", params.regression)):
        for i, lp in enumerate(layers):
            out.append((f"{prefix}.{i}.weight", lp.linear.weight))
            out.append((f"{prefix}.{i}.bias", lp.linear.bias))
            out.append((f"{prefix}.{i}.gamma", lp.norm.gamma))
            out.append((f"{prefix}.{i}.beta", lp.norm.beta))
            out.append((f"{prefix}.{i}.running_mean", lp.norm.running_mean))
            out.append((f"{prefix}.{i}.running_var", lp.norm.running_var))
    out.append(("head.weight", params.head.weight))
    out.append(("head.bias", params.head.bias))
    return out


def avg_pool_temporal(features: np.ndarray, window: int) -> np.ndarray:
    """Smooth each feature channel of an (F, C) array over time."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise DimensionError("features must be (F, C)")
    return kernels.avg_pool_forward(
        np.ascontiguousarray(features.T), window
    ).T.copy()


def _bn_forward(z, norm: NormParams, mode: str):
    if mode == "train":
        mean = z.mean(axis=0)
        var = z.var(axis=0)
    else:
        mean = norm.running_mean
        var = norm.running_var
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (z - mean) * inv_std
    out = norm.gamma * xhat + norm.beta
    return out, {"xhat": xhat, "inv_std": inv_std,
                 "batch_mean": mean, "batch_var": var}


def _bn_backward(dy, norm: NormParams, bn_cache):
    xhat = bn_cache["xhat"]
    inv_std = bn_cache["inv_std"]
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    dxhat = dy * norm.gamma
    dz = inv_std * (
        dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0)
    )
    return dz, dgamma, dbeta


def _block_forward(layers, x0, dropout, mode, rng, dense):
    feats = [x0]
    caches = []
    for lp in layers:
        inp = np.concatenate(feats, axis=1) if len(feats) > 1 and dense else feats[-1]
        z = inp @ lp.linear.weight + lp.linear.bias
        y, bn_cache = _bn_forward(z, lp.norm, mode)
        relu_mask = y > 0
        out = y * relu_mask
        drop_mask = None
        if mode == "train" and dropout > 0.0:
            if rng is None:
                raise ParameterError("train-mode forward with dropout needs an rng")
            keep = 1.0 - dropout
            drop_mask = (rng.random(out.shape) < keep) / keep
            out = out * drop_mask
        caches.append({
            "inp": inp,
            "widths": [f.shape[1] for f in feats],
            "relu_mask": relu_mask,
            "drop_mask": drop_mask,
            **bn_cache,
        })
        feats.append(out)
    return feats, caches


def _block_backward(layers, caches, d_feats, dense, grads, prefix):
    """Walk a block in reverse given per-feature upstream gradients."""
    for i in reversed(range(len(layers))):
        lp, c = layers[i], caches[i]
        do = d_feats[i + 1]
        assert do is not None, "gradient for a layer output never materialized"
        if c["drop_mask"] is not None:
            do = do * c["drop_mask"]
        dy = do * c["relu_mask"]
        dz, dgamma, dbeta = _bn_backward(dy, lp.norm, c)
        grads[f"{prefix}.{i}.gamma"] = dgamma
        grads[f"{prefix}.{i}.beta"] = dbeta
        grads[f"{prefix}.{i}.weight"] = c["inp"].T @ dz
        grads[f"{prefix}.{i}.bias"] = dz.sum(axis=0)
        dinp = dz @ lp.linear.weight.T
        if dense:
            offset = 0
            for j, w in enumerate(c["widths"]):
                piece = dinp[:, offset:offset + w]
                d_feats[j] = piece if d_feats[j] is None else d_feats[j] + piece
                offset += w
        else:
            j = i
            d_feats[j] = dinp if d_feats[j] is None else d_feats[j] + dinp
    return d_feats[0]


def forward(params: NetworkParams, basis: TrajectoryBasis, inputs,
            rng=None) -> ForwardResult:
    """Run the network on (F, 2J) or batched (B, F, 2J) 2D inputs.

    Returns trajectory coefficients, synthesized 3D poses, and a cache for
    :func:`backward`. Pure: running statistics are not touched; train-mode
    batch statistics are returned inside the cache.
    """
    cfg = params.config
    x = np.asarray(inputs, dtype=float)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    in2d = 2 * cfg.joints
    if x.ndim != 3 or x.shape[1] != cfg.frames or x.shape[2] != in2d:
        raise DimensionError(
            f"input shape {x.shape} does not match (B, {cfg.frames}, {in2d})"
        )
    if not np.all(np.isfinite(x)):
        raise NumericError("network input contains non-finite values")
    if basis.num_frames != cfg.frames or basis.num_bases != cfg.num_bases:
        raise DimensionError(
            f"basis is {basis.num_frames}x{basis.num_bases}, config wants "
            f"{cfg.frames}x{cfg.num_bases}"
        )
    mode = params.mode
    if mode not in ("train", "eval"):
        raise ParameterError(f"unknown mode {mode!r}")
    n_batch, frames = x.shape[0], cfg.frames
    width, k = cfg.feat_width, cfg.num_bases

    flat = x.reshape(n_batch * frames, in2d)
    feat_feats, feat_caches = _block_forward(
        params.feature, flat, cfg.feat_dropout, mode, rng, cfg.dense_connections
    )
    feats = feat_feats[-1].reshape(n_batch, frames, width)

    rows = np.ascontiguousarray(feats.transpose(0, 2, 1)).reshape(-1, frames)
    pooled_rows = kernels.avg_pool_forward(rows, cfg.pool_window)
    pooled = pooled_rows.reshape(n_batch, width, frames).transpose(0, 2, 1)

    trans = (2.0 / frames) * np.einsum("fk,bfc->bck", basis.theta, pooled)
    trans_flat = trans.reshape(n_batch, width * k)

    reg_feats, reg_caches = _block_forward(
        params.regression, trans_flat, cfg.reg_dropout, mode, rng,
        cfg.dense_connections,
    )
    # the head reads the dense concatenation (or the last layer otherwise)
    reg_out = (np.concatenate(reg_feats, axis=1) if cfg.dense_connections
               else reg_feats[-1])
    coeff_flat = reg_out @ params.head.weight + params.head.bias
    coeffs = coeff_flat.reshape(n_batch, k, 3 * cfg.joints)
    poses = np.einsum("fk,bkj->bfj", basis.theta, coeffs)

    cache = {
        "mode": mode,
        "squeeze": squeeze,
        "theta": basis.theta,
        "feat_caches": feat_caches,
        "reg_caches": reg_caches,
        "reg_out": reg_out,
        "reg_widths": [f.shape[1] for f in reg_feats],
        "pooled": pooled,
        "trans": trans,
        "poses": poses,
        "config": cfg,
    }
    if squeeze:
        return ForwardResult(coeffs[0], poses[0], cache)
    return ForwardResult(coeffs, poses, cache)


def l1_loss(pred: np.ndarray, gt: np.ndarray) -> float:
    """Sum of absolute errors per sequence, averaged over sequences and frames."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise DimensionError(f"shape mismatch {pred.shape} vs {gt.shape}")
    if pred.ndim == 2:
        pred, gt = pred[None], gt[None]
    if pred.ndim != 3:
        raise DimensionError("expected (F, D) or (B, F, D) arrays")
    n_batch, frames = pred.shape[0], pred.shape[1]
    return float(np.abs(pred - gt).sum() / (n_batch * frames))


def backward(params: NetworkParams, cache: dict, gt) -> dict:
    """Gradients of :func:`l1_loss` w.r.t. every learnable tensor.

    Requires the cache of a train-mode forward. The subgradient of |x| at
    zero is taken to be zero.
    """
    if cache["mode"] != "train":
        raise ParameterError("backward needs the cache of a train-mode forward")
    cfg = cache["config"]
    poses = cache["poses"]
    theta = cache["theta"]
    gt = np.asarray(gt, dtype=float)
    if cache["squeeze"]:
        gt = gt[None]
    if gt.shape != poses.shape:
        raise DimensionError(f"target shape {gt.shape} != output {poses.shape}")
    n_batch, frames = poses.shape[0], poses.shape[1]
    k, width = cfg.num_bases, cfg.feat_width

    dposes = np.sign(poses - gt) / (n_batch * frames)
    dcoeffs = np.einsum("fk,bfj->bkj", theta, dposes)
    dcoeff_flat = dcoeffs.reshape(n_batch, -1)

    grads: dict[str, np.ndarray] = {}
    grads["head.weight"] = cache["reg_out"].T @ dcoeff_flat
    grads["head.bias"] = dcoeff_flat.sum(axis=0)
    dreg_out = dcoeff_flat @ params.head.weight.T

    n_reg = len(params.regression)
    if cfg.dense_connections:
        d_reg_feats: list = []
        offset = 0
        for w in cache["reg_widths"]:
            d_reg_feats.append(dreg_out[:, offset:offset + w])
            offset += w
    else:
        d_reg_feats = [None] * n_reg + [dreg_out]
    dtrans_flat = _block_backward(
        params.regression, cache["reg_caches"], d_reg_feats,
        cfg.dense_connections, grads, "regression",
    )
    dtrans = dtrans_flat.reshape(n_batch, width, k)
    dpooled = (2.0 / frames) * np.einsum("fk,bck->bfc", theta, dtrans)

    drows = np.ascontiguousarray(dpooled.transpose(0, 2, 1)).reshape(-1, frames)
    dfeat_rows = kernels.avg_pool_backward(drows, cfg.pool_window)
    dfeat = (
        dfeat_rows.reshape(n_batch, width, frames)
        .transpose(0, 2, 1)
        .reshape(n_batch * frames, width)
    )
    n_feat = len(params.feature)
    _block_backward(
        params.feature, cache["feat_caches"],
        [None] * n_feat + [dfeat],
        cfg.dense_connections, grads, "feature",
    )
    return grads


def apply_batch_stats(params: NetworkParams, cache: dict,
                      momentum: float = 0.1) -> None:
    """Fold the cache's batch statistics into the running statistics."""
    if cache["mode"] != "train":
        return
    for layers, caches in ((params.feature, cache["feat_caches"]),
                           (params.regression, cache["reg_caches"])):
        for lp, c in zip(layers, caches):
            lp.norm.running_mean *= 1.0 - momentum
            lp.norm.running_mean += momentum * c["batch_mean"]
            lp.norm.running_var *= 1.0 - momentum
            lp.norm.running_var += momentum * c["batch_var"]
