"""File formats, 2D normalization, cameras, and synthetic motion.

Formats (line-oriented, whitespace-separated, full-precision decimal):

* ``POSESEQ v1 F=<F> J=<J> D=<2|3> [units=<mm|norm>]`` followed by F rows
  of J*D floats — pose sequences, 3D in millimeters, 2D in normalized
  image units.
* ``SKEL v1`` followed by ``joint <index> <name>`` lines, one
  ``root <index>`` line, and ``pair <left> <right>`` lines.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bases import dct_basis
from .errors import DimensionError, FormatError, ParameterError
from .motion import SkeletonConfig

# --- pose-sequence files ----------------------------------------------------


def save_pose_sequence(path, seq: np.ndarray, units: str | None = None) -> None:
    """Write an (F, J, D) pose sequence; round-trip exact."""
    seq = np.asarray(seq, dtype=float)
    if seq.ndim != 3 or seq.shape[2] not in (2, 3):
        raise DimensionError(f"expected (F, J, 2|3), got {seq.shape}")
    frames, joints, dims = seq.shape
    if units is None:
        units = "mm" if dims == 3 else "norm"
    lines = [f"POSESEQ v1 F={frames} J={joints} D={dims} units={units}"]
    flat = seq.reshape(frames, joints * dims)
    for row in flat:
        lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_pose_sequence(path):
    """Read a POSESEQ v1 file -> ((F, J, D) array, metadata dict)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty pose-sequence file", path=path, line=1)
    head = lines[0].split()
    if len(head) < 5 or head[0] != "POSESEQ" or head[1] != "v1":
        raise FormatError(
            "expected 'POSESEQ v1 F=.. J=.. D=..'", path=path, line=1
        )
    fields = {}
    for token in head[2:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise FormatError(f"malformed header token {token!r}", path=path, line=1)
        fields[key] = value
    try:
        frames = int(fields["F"])
        joints = int(fields["J"])
        dims = int(fields["D"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad header field: {exc}", path=path, line=1)
    if dims not in (2, 3):
        raise FormatError(f"D must be 2 or 3, got {dims}", path=path, line=1)
    if frames < 1 or joints < 1:
        raise FormatError("F and J must be >= 1", path=path, line=1)
    units = fields.get("units", "mm" if dims == 3 else "norm")
    data = lines[1:]
    if len(data) != frames:
        bad = frames + 2 if len(data) > frames else len(data) + 2
        raise FormatError(
            f"expected {frames} rows, found {len(data)}", path=path, line=bad
        )
    out = np.empty((frames, joints * dims))
    for i, line in enumerate(data):
        parts = line.split()
        if len(parts) != joints * dims:
            raise FormatError(
                f"expected {joints * dims} values, found {len(parts)}",
                path=path, line=i + 2,
            )
        try:
            out[i] = [float(p) for p in parts]
        except ValueError:
            raise FormatError("non-numeric token", path=path, line=i + 2)
    if not np.all(np.isfinite(out)):
        raise FormatError("non-finite value in pose data", path=path)
    meta = {"F": frames, "J": joints, "D": dims, "units": units}
    return out.reshape(frames, joints, dims), meta


# --- skeleton files ---------------------------------------------------------


def save_skeleton(path, skeleton: SkeletonConfig) -> None:
    lines = ["SKEL v1"]
    for i, name in enumerate(skeleton.joint_names):
        if any(ch.isspace() for ch in name):
            raise ParameterError(f"joint name {name!r} contains whitespace")
        lines.append(f"joint {i} {name}")
    lines.append(f"root {skeleton.root_index}")
    for left, right in skeleton.lr_pairs:
        lines.append(f"pair {left} {right}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_skeleton(path) -> SkeletonConfig:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].split() != ["SKEL", "v1"]:
        raise FormatError("expected 'SKEL v1' header", path=path, line=1)
    joints: dict[int, str] = {}
    root = None
    pairs = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        try:
            if parts[0] == "joint" and len(parts) == 3:
                joints[int(parts[1])] = parts[2]
            elif parts[0] == "root" and len(parts) == 2:
                root = int(parts[1])
            elif parts[0] == "pair" and len(parts) == 3:
                pairs.append((int(parts[1]), int(parts[2])))
            else:
                raise FormatError(f"unrecognized line {line!r}",
                                  path=path, line=lineno)
        except ValueError:
            raise FormatError(f"non-integer index in {line!r}",
                              path=path, line=lineno)
    if root is None:
        raise FormatError("missing 'root' line", path=path)
    if sorted(joints) != list(range(len(joints))) or not joints:
        raise FormatError("joint indices must cover 0..J-1", path=path)
    try:
        return SkeletonConfig(
            joint_names=tuple(joints[i] for i in range(len(joints))),
            root_index=root,
            lr_pairs=tuple(pairs),
        )
    except ValueError as exc:
        raise FormatError(f"invalid skeleton: {exc}", path=path)


# --- 2D normalization -------------------------------------------------------


def normalize_2d(seq2d: np.ndarray, image_width: float,
                 image_height: float) -> np.ndarray:
    """Map pixel coordinates to [-1, 1] on the long side, aspect preserved.

    u' = (2u - w) / max(w, h), v' = (2v - h) / max(w, h).
    """
    if image_width <= 0 or image_height <= 0:
        raise ParameterError("image dimensions must be positive")
    seq2d = np.asarray(seq2d, dtype=float)
    if seq2d.shape[-1] != 2:
        raise DimensionError("last axis must hold (u, v) pairs")
    long_side = max(image_width, image_height)
    out = np.empty_like(seq2d)
    out[..., 0] = (2.0 * seq2d[..., 0] - image_width) / long_side
    out[..., 1] = (2.0 * seq2d[..., 1] - image_height) / long_side
    return out


def denormalize_2d(seq2d: np.ndarray, image_width: float,
                   image_height: float) -> np.ndarray:
    """Inverse of :func:`normalize_2d` for the same image size."""
    if image_width <= 0 or image_height <= 0:
        raise ParameterError("image dimensions must be positive")
    seq2d = np.asarray(seq2d, dtype=float)
    long_side = max(image_width, image_height)
    out = np.empty_like(seq2d)
    out[..., 0] = (seq2d[..., 0] * long_side + image_width) / 2.0
    out[..., 1] = (seq2d[..., 1] * long_side + image_height) / 2.0
    return out


# --- cameras ----------------------------------------------------------------


@dataclass(frozen=True)
class CameraModel:
    kind: str  # "orthographic" or "pinhole"
    focal: float = 1.0
    cx: float = 0.0
    cy: float = 0.0

    def __post_init__(self):
        if self.kind not in ("orthographic", "pinhole"):
            raise ParameterError(f"unknown camera kind {self.kind!r}")
        if self.kind == "pinhole" and self.focal <= 0:
            raise ParameterError("pinhole camera needs focal > 0")


def project_camera(seq3d: np.ndarray, camera: CameraModel) -> np.ndarray:
    """Project (..., 3) points to (..., 2); pinhole requires Z > 0."""
    seq3d = np.asarray(seq3d, dtype=float)
    if seq3d.shape[-1] != 3:
        raise DimensionError("last axis must hold (X, Y, Z)")
    if camera.kind == "orthographic":
        return seq3d[..., :2].copy()
    z = seq3d[..., 2]
    if np.any(z <= 0):
        raise ParameterError("pinhole projection needs Z > 0 for all joints")
    out = np.empty(seq3d.shape[:-1] + (2,))
    out[..., 0] = camera.focal * seq3d[..., 0] / z + camera.cx
    out[..., 1] = camera.focal * seq3d[..., 1] / z + camera.cy
    return out


# --- synthetic motion -------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    frames: int
    joints: int
    band_limit: int           # number of generating basis vectors
    amplitude: float = 100.0  # mm scale of coefficient draws
    noise_sigma: float = 0.0  # mm, i.i.d. additive noise
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.band_limit <= self.frames:
            raise ParameterError(
                f"band_limit must be in [1, {self.frames}], got {self.band_limit}"
            )
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")
        if self.joints < 1:
            raise ParameterError("joints must be >= 1")


def synth_motion(cfg: SynthConfig) -> np.ndarray:
    """One (F, 3J) band-limited motion: cosine bases x Gaussian coefficients.

    With ``noise_sigma == 0`` the motion lies exactly in the span of the
    first ``band_limit`` cosine bases. Deterministic per seed.
    """
    rng = np.random.default_rng(cfg.seed)
    basis = dct_basis(cfg.frames, cfg.band_limit)
    coeffs = cfg.amplitude * rng.standard_normal((cfg.band_limit, 3 * cfg.joints))
    motion = basis.theta @ coeffs
    if cfg.noise_sigma > 0:
        motion = motion + rng.normal(0.0, cfg.noise_sigma, motion.shape)
    return motion


def synth_motion_corpus(cfg: SynthConfig, count: int) -> list[np.ndarray]:
    """``count`` independent motions with per-sequence derived seeds."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    seeds = np.random.default_rng(cfg.seed).integers(0, 2**63 - 1, size=count)
    out = []
    for s in seeds:
        seq_cfg = SynthConfig(cfg.frames, cfg.joints, cfg.band_limit,
                              cfg.amplitude, cfg.noise_sigma, int(s))
        out.append(synth_motion(seq_cfg))
    return out


def _mirror_operators(joints: int, pairs):
    """Linear mirror maps on flattened (u, v) columns and on Z columns."""
    perm = np.arange(joints)
    for left, right in pairs:
        perm[left], perm[right] = perm[right], perm[left]
    f_xy = np.zeros((2 * joints, 2 * joints))
    f_z = np.zeros((joints, joints))
    for j in range(joints):
        f_xy[2 * perm[j], 2 * j] = -1.0      # u negates and swaps sides
        f_xy[2 * perm[j] + 1, 2 * j + 1] = 1.0
        f_z[perm[j], j] = 1.0
    return f_xy, f_z


def make_lifting_dataset(
    count: int,
    cfg: SynthConfig,
    camera: CameraModel,
    depth: float = 4500.0,
    image_size: tuple[float, float] = (1000.0, 1000.0),
    correlated_z: bool = True,
    z_mix_scale: float = 1.0,
    z_noise_scale: float = 1.0,
    mirror_pairs=None,
    observed_noise: bool = True,
):
    """Paired (inputs2d, targets3d) arrays for supervised lifting.

    Generates band-limited 3D motions, places them ``depth`` mm in front of
    the camera, projects to 2D, and normalizes the pixel coordinates.
    With ``correlated_z`` the Z coefficient columns are a fixed (seeded)
    linear mixture of the X/Y columns plus the configured noise, so depth
    is recoverable from the 2D observations up to the noise floor — the
    desk-scale stand-in for the statistical regularity of real motion.
    ``z_mix_scale`` shrinks the depth amplitude relative to the image
    plane and ``z_noise_scale`` the depth noise; lowering both keeps the
    unobservable part of the target small compared to the noise floor.
    Passing left/right ``mirror_pairs`` symmetrizes the mixture so that a
    horizontal flip of a sample is another valid sample (flip augmentation
    becomes exact). ``observed_noise`` controls whether the 2D inputs see
    the target noise (detections track the true noisy motion) or project
    the clean motion (target noise is independent measurement error).

    Returns (inputs2d (N, F, 2J) normalized, targets3d (N, F, 3J) mm).
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    joints = cfg.joints
    basis = dct_basis(cfg.frames, cfg.band_limit)
    x_cols = np.arange(joints) * 3
    y_cols = x_cols + 1
    z_cols = x_cols + 2
    xy_cols = np.sort(np.concatenate([x_cols, y_cols]))
    mix = rng.standard_normal((2 * joints, joints)) / np.sqrt(2 * joints)
    if mirror_pairs is not None:
        f_xy, f_z = _mirror_operators(joints, mirror_pairs)
        mix = 0.5 * (mix + f_xy @ mix @ f_z)
    mix *= z_mix_scale

    inputs = np.empty((count, cfg.frames, 2 * joints))
    targets = np.empty((count, cfg.frames, 3 * joints))
    width, height = image_size
    for i in range(count):
        coeffs = np.empty((cfg.band_limit, 3 * joints))
        coeffs[:, xy_cols] = cfg.amplitude * rng.standard_normal(
            (cfg.band_limit, 2 * joints)
        )
        if correlated_z:
            coeffs[:, z_cols] = coeffs[:, xy_cols] @ mix
        else:
            coeffs[:, z_cols] = cfg.amplitude * z_mix_scale * \
                rng.standard_normal((cfg.band_limit, joints))
        clean = basis.theta @ coeffs
        motion = clean
        if cfg.noise_sigma > 0:
            noise = rng.normal(0.0, cfg.noise_sigma, clean.shape)
            noise[:, z_cols] *= z_noise_scale
            motion = clean + noise
        targets[i] = motion
        seen = motion if observed_noise else clean
        placed = seen.reshape(cfg.frames, joints, 3).copy()
        placed[..., 2] += depth
        pixels = project_camera(placed, camera)
        inputs[i] = normalize_2d(pixels, width, height).reshape(
            cfg.frames, 2 * joints
        )
    return inputs, targets
