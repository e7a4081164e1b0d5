"""Training loop, Adam optimizer, learning-rate schedule, checkpoints."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bases import FAMILIES, TrajectoryBasis
from .errors import DimensionError, FormatError, ParameterError
from .motion import SkeletonConfig, flip_motion_matrix
from .network import (
    NetworkConfig,
    NetworkParams,
    apply_batch_stats,
    backward,
    forward,
    init_network,
    l1_loss,
    named_arrays,
    named_learnables,
)

BN_MOMENTUM = 0.1


@dataclass
class TrainConfig:
    lr0: float = 1e-4
    epochs: int = 100
    decay_epochs: tuple[int, ...] = (60, 85)
    shrink: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 64
    flip_augment: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "decay_epochs",
                           tuple(int(e) for e in self.decay_epochs))
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")
        for e in self.decay_epochs:
            if not 0 <= e < self.epochs:
                raise ParameterError(
                    f"decay epoch {e} outside [0, {self.epochs})"
                )
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")
        if not 0.0 < self.shrink <= 1.0:
            raise ParameterError("shrink must be in (0, 1]")


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """Step schedule: lr0 shrunk once per decay epoch already reached."""
    if not 0 <= epoch < cfg.epochs:
        raise ParameterError(f"epoch {epoch} outside [0, {cfg.epochs})")
    n_decays = sum(1 for e in cfg.decay_epochs if epoch >= e)
    return cfg.lr0 * cfg.shrink ** n_decays


@dataclass
class AdamState:
    m: dict
    v: dict
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: NetworkParams, beta1=0.9, beta2=0.999,
                   eps=1e-8) -> "AdamState":
        m = {name: np.zeros_like(arr) for name, arr in named_learnables(params)}
        v = {name: np.zeros_like(arr) for name, arr in named_learnables(params)}
        return cls(m=m, v=v, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: NetworkParams, grads: dict, state: AdamState,
              lr: float) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update, in place on the parameter arrays."""
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for name, arr in named_learnables(params):
        g = grads[name]
        if g.shape != arr.shape:
            raise DimensionError(f"gradient shape mismatch for {name}")
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / (1.0 - b1 ** t)
        v_hat = state.v[name] / (1.0 - b2 ** t)
        arr -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


def train(
    params: NetworkParams,
    basis: TrajectoryBasis,
    inputs2d: np.ndarray,
    targets3d: np.ndarray,
    cfg: TrainConfig,
    skeleton: SkeletonConfig | None = None,
):
    """Train in place; returns the eval-mode params and a per-epoch loss log.

    ``inputs2d`` is (N, F, 2J) and ``targets3d`` is (N, F, 3J). Flip
    augmentation replaces each sample by its mirror with probability 1/2
    (inputs and targets together) and needs a skeleton for the left/right
    pairing. Fully deterministic for a fixed seed.
    """
    inputs2d = np.asarray(inputs2d, dtype=float)
    targets3d = np.asarray(targets3d, dtype=float)
    net_cfg = params.config
    n = inputs2d.shape[0]
    if n == 0:
        raise DimensionError("empty dataset")
    if inputs2d.shape != (n, net_cfg.frames, 2 * net_cfg.joints):
        raise DimensionError(f"inputs2d shape {inputs2d.shape} mismatches config")
    if targets3d.shape != (n, net_cfg.frames, 3 * net_cfg.joints):
        raise DimensionError(f"targets3d shape {targets3d.shape} mismatches config")
    if cfg.flip_augment and skeleton is None:
        raise ParameterError("flip augmentation needs a skeleton")

    # independent streams so augmentation draws never shift the shuffling
    shuffle_seq, model_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    model_rng = np.random.default_rng(model_seq)
    state = AdamState.for_params(params, cfg.beta1, cfg.beta2, cfg.adam_eps)
    loss_log = []
    for epoch in range(cfg.epochs):
        lr = lr_at_epoch(cfg, epoch)
        order = shuffle_rng.permutation(n)
        params.mode = "train"
        batch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = inputs2d[idx]
            yb = targets3d[idx]
            if cfg.flip_augment:
                flip = model_rng.random(len(idx)) < 0.5
                if flip.any():
                    xb = xb.copy()
                    yb = yb.copy()
                    for i in np.nonzero(flip)[0]:
                        xb[i] = flip_motion_matrix(xb[i], skeleton, dims=2)
                        yb[i] = flip_motion_matrix(yb[i], skeleton, dims=3)
            result = forward(params, basis, xb, rng=model_rng)
            batch_losses.append(l1_loss(result.poses3d, yb))
            grads = backward(params, result.cache, yb)
            apply_batch_stats(params, result.cache, BN_MOMENTUM)
            adam_step(params, grads, state, lr)
        loss_log.append(float(np.mean(batch_losses)))
    params.mode = "eval"
    return params, loss_log


# --- checkpoint format -----------------------------------------------------

def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(values).ravel())


def save_checkpoint(path, params: NetworkParams, basis: TrajectoryBasis,
                    skeleton: SkeletonConfig) -> None:
    """Write the TRAJNET v1 text checkpoint (config, basis, skeleton, arrays)."""
    cfg = params.config
    lines = ["TRAJNET v1"]
    lines.append(
        "config "
        f"frames={cfg.frames} num_bases={cfg.num_bases} joints={cfg.joints} "
        f"feat_layers={cfg.feat_layers} feat_width={cfg.feat_width} "
        f"feat_dropout={repr(cfg.feat_dropout)} reg_layers={cfg.reg_layers} "
        f"reg_width={cfg.reg_width} reg_dropout={repr(cfg.reg_dropout)} "
        f"pool_window={cfg.pool_window} "
        f"dense_connections={int(cfg.dense_connections)} seed={cfg.seed}"
    )
    lines.append(f"skeleton root={skeleton.root_index}")
    lines.append("names " + " ".join(skeleton.joint_names))
    lines.append("pairs " + " ".join(f"{l}:{r}" for l, r in skeleton.lr_pairs))
    lines.append(
        f"basis family={basis.family.upper()} F={basis.num_frames} "
        f"K={basis.num_bases}"
    )
    for row in basis.theta:
        lines.append(_fmt(row))
    for name, arr in named_arrays(params):
        dims = " ".join(str(d) for d in arr.shape)
        lines.append(f"param {name} {dims}")
        if arr.ndim == 2:
            for row in arr:
                lines.append(_fmt(row))
        else:
            lines.append(_fmt(arr))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class _Reader:
    def __init__(self, path):
        with open(path) as fh:
            self.lines = fh.read().splitlines()
        self.path = path
        self.pos = 0

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise FormatError(f"unexpected end of file, wanted {what}",
                              path=self.path, line=self.pos + 1)
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def error(self, message: str):
        raise FormatError(message, path=self.path, line=self.pos)

    def floats(self, count: int, what: str) -> np.ndarray:
        parts = self.next(what).split()
        if len(parts) != count:
            self.error(f"expected {count} values for {what}, found {len(parts)}")
        try:
            return np.array([float(p) for p in parts])
        except ValueError:
            self.error(f"non-numeric value in {what}")


def _parse_kv(line: str, prefix: str, reader: _Reader) -> dict:
    parts = line.split()
    if not parts or parts[0] != prefix:
        reader.error(f"expected a '{prefix}' line")
    out = {}
    for token in parts[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            reader.error(f"malformed token {token!r}")
        out[key] = value
    return out


def load_checkpoint(path):
    """Read a TRAJNET v1 checkpoint -> (eval-mode params, basis, skeleton)."""
    reader = _Reader(path)
    if reader.next("header") != "TRAJNET v1":
        raise FormatError("expected 'TRAJNET v1' header", path=path, line=1)
    kv = _parse_kv(reader.next("config"), "config", reader)
    try:
        cfg = NetworkConfig(
            frames=int(kv["frames"]),
            num_bases=int(kv["num_bases"]),
            joints=int(kv["joints"]),
            feat_layers=int(kv["feat_layers"]),
            feat_width=int(kv["feat_width"]),
            feat_dropout=float(kv["feat_dropout"]),
            reg_layers=int(kv["reg_layers"]),
            reg_width=int(kv["reg_width"]),
            reg_dropout=float(kv["reg_dropout"]),
            pool_window=int(kv["pool_window"]),
            dense_connections=bool(int(kv["dense_connections"])),
            seed=int(kv["seed"]),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad config: {exc}", path=path, line=2)

    skel_kv = _parse_kv(reader.next("skeleton"), "skeleton", reader)
    names_line = reader.next("names").split()
    if not names_line or names_line[0] != "names":
        reader.error("expected a 'names' line")
    pairs_line = reader.next("pairs").split()
    if not pairs_line or pairs_line[0] != "pairs":
        reader.error("expected a 'pairs' line")
    try:
        pairs = tuple(
            (int(a), int(b))
            for a, b in (tok.split(":") for tok in pairs_line[1:])
        )
        skeleton = SkeletonConfig(
            joint_names=tuple(names_line[1:]),
            root_index=int(skel_kv["root"]),
            lr_pairs=pairs,
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad skeleton: {exc}", path=path, line=reader.pos)

    basis_kv = _parse_kv(reader.next("basis"), "basis", reader)
    try:
        family = basis_kv["family"].lower()
        frames = int(basis_kv["F"])
        num_bases = int(basis_kv["K"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad basis header: {exc}", path=path, line=reader.pos)
    if family not in FAMILIES:
        reader.error(f"unknown basis family {basis_kv['family']!r}")
    theta = np.stack([reader.floats(num_bases, "basis row")
                      for _ in range(frames)])
    basis = TrajectoryBasis(theta, family)

    params = init_network(cfg)
    params.mode = "eval"
    for name, arr in named_arrays(params):
        head = reader.next(f"param {name}").split()
        if len(head) < 2 or head[0] != "param" or head[1] != name:
            reader.error(f"expected 'param {name}'")
        dims = tuple(int(d) for d in head[2:])
        if dims != arr.shape:
            reader.error(
                f"shape {dims} for {name} does not match expected {arr.shape}"
            )
        if arr.ndim == 2:
            for r in range(arr.shape[0]):
                arr[r] = reader.floats(arr.shape[1], f"{name} row {r}")
        else:
            arr[:] = reader.floats(arr.shape[0], name)
    if reader.pos != len(reader.lines):
        reader.error("trailing data after last parameter")
    if basis.num_frames != cfg.frames or basis.num_bases != cfg.num_bases:
        raise FormatError("basis dimensions do not match config", path=path)
    if skeleton.num_joints != cfg.joints:
        raise FormatError("skeleton joint count does not match config", path=path)
    return params, basis, skeleton
