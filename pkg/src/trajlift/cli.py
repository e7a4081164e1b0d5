"""Command-line surface: bases, analyze, synth, train, infer, eval, plot.

Exit codes: 0 success, 2 usage or validation problem, 3 I/O or file-format
problem, 4 numeric failure. With a fixed seed every command writes
byte-identical outputs for identical inputs; ``TRAJLIFT_SEED`` overrides
the seed found in a training config file.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .bases import (
    coefficient_magnitude_profile,
    dct_basis,
    load_basis,
    save_basis,
    svd_basis,
    truncation_error_profile,
)
from .errors import DimensionError, FormatError, NumericError, ParameterError
from .inference import SlidingConfig, sliding_infer
from .io import (
    CameraModel,
    SynthConfig,
    load_pose_sequence,
    load_skeleton,
    make_lifting_dataset,
    save_pose_sequence,
    save_skeleton,
)
from .metrics import evaluate
from .motion import SkeletonConfig, default_skeleton
from .network import NetworkConfig, init_network
from .training import TrainConfig, load_checkpoint, save_checkpoint, train


def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    return p


def _require_dir(path) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise FileNotFoundError(f"no such directory: {p}")
    return p


def _fmt(value: float) -> str:
    return repr(float(value))


def _load_motion_corpus(corpus_dir: Path) -> list[np.ndarray]:
    """All 3D pose-sequence files in a directory as motion matrices."""
    files = sorted(corpus_dir.glob("*_3d.poseseq"))
    if not files:
        files = sorted(corpus_dir.glob("*.poseseq"))
    motions = []
    for f in files:
        seq, meta = load_pose_sequence(f)
        if meta["D"] != 3:
            continue
        motions.append(seq.reshape(meta["F"], 3 * meta["J"]))
    if not motions:
        raise ParameterError(f"no 3D pose sequences found in {corpus_dir}")
    frames = {m.shape[0] for m in motions}
    if len(frames) != 1:
        raise ParameterError(
            f"corpus mixes frame counts {sorted(frames)}; need a uniform F"
        )
    return motions


# --- bases -------------------------------------------------------------------


def cmd_bases(args) -> int:
    if args.family == "svd":
        if args.corpus is None:
            raise ParameterError("--family svd requires --corpus")
        motions = _load_motion_corpus(_require_dir(args.corpus))
        basis = svd_basis(motions, args.num_bases,
                          max_columns=args.max_columns, seed=args.seed)
        if basis.num_frames != args.frames:
            raise ParameterError(
                f"corpus has F={basis.num_frames}, --frames says {args.frames}"
            )
    else:
        basis = dct_basis(args.frames, args.num_bases)
    save_basis(args.out, basis)
    gram = basis.theta.T @ basis.theta
    off = gram - np.diag(np.diag(gram))
    print(f"wrote {args.out}")
    print(f"orthogonality_residual={_fmt(np.abs(off).max())}")
    return 0


# --- analyze ------------------------------------------------------------------


def cmd_analyze(args) -> int:
    basis = load_basis(_require_file(args.basis))
    motions = _load_motion_corpus(_require_dir(args.corpus))
    if motions[0].shape[0] != basis.num_frames:
        raise ParameterError(
            f"corpus F={motions[0].shape[0]} does not match basis "
            f"F={basis.num_frames}"
        )
    max_k = args.max_k
    if not 1 <= max_k <= basis.num_bases:
        raise ParameterError(
            f"--max-k must be in [1, {basis.num_bases}], got {max_k}"
        )
    coef_profile = coefficient_magnitude_profile(motions, basis.truncated(max_k))
    trunc_profile = truncation_error_profile(
        motions, basis.family, range(1, max_k + 1)
    )
    prefix = args.out_prefix
    coef_path = f"{prefix}_coefficients.csv"
    with open(coef_path, "w") as fh:
        fh.write("k,mean_abs_coefficient\n")
        for k, value in coef_profile:
            fh.write(f"{k},{_fmt(value)}\n")
    trunc_path = f"{prefix}_truncation.csv"
    with open(trunc_path, "w") as fh:
        fh.write("num_bases,mean_error_mm\n")
        for k, value in trunc_profile:
            fh.write(f"{k},{_fmt(value)}\n")
    print(f"wrote {coef_path}")
    print(f"wrote {trunc_path}")
    return 0


# --- synth --------------------------------------------------------------------


def _skeleton_for(joints: int) -> SkeletonConfig:
    if joints == 17:
        return default_skeleton()
    return SkeletonConfig(tuple(f"j{i}" for i in range(joints)), 0, ())


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = SynthConfig(
        frames=args.frames, joints=args.joints, band_limit=args.band_limit,
        amplitude=args.amplitude, noise_sigma=args.noise_sigma, seed=args.seed,
    )
    if args.camera == "pinhole":
        camera = CameraModel("pinhole", focal=args.focal,
                             cx=args.image_size / 2.0, cy=args.image_size / 2.0)
    else:
        camera = CameraModel("orthographic")
    inputs, targets = make_lifting_dataset(
        args.num_sequences, cfg, camera, depth=args.depth,
        image_size=(args.image_size, args.image_size),
        correlated_z=not args.independent_z,
    )
    skeleton = _skeleton_for(args.joints)
    save_skeleton(out_dir / "skeleton.skel", skeleton)
    for i in range(args.num_sequences):
        stem = f"seq_{i:04d}"
        save_pose_sequence(
            out_dir / f"{stem}_2d.poseseq",
            inputs[i].reshape(args.frames, args.joints, 2),
        )
        save_pose_sequence(
            out_dir / f"{stem}_3d.poseseq",
            targets[i].reshape(args.frames, args.joints, 3),
        )
    print(f"wrote {args.num_sequences} sequence pairs to {out_dir}")
    return 0


# --- train --------------------------------------------------------------------

_NETWORK_KEYS = {
    "feat_layers": int, "feat_width": int, "feat_dropout": float,
    "reg_layers": int, "reg_width": int, "reg_dropout": float,
    "pool_window": int, "dense_connections": lambda v: bool(int(v)),
}
_TRAIN_KEYS = {
    "lr0": float, "epochs": int, "shrink": float, "batch_size": int,
    "flip_augment": lambda v: bool(int(v)), "beta1": float, "beta2": float,
    "adam_eps": float,
    "decay_epochs": lambda v: tuple(int(x) for x in v.split(",") if x),
}


def _read_config_file(path) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError("expected key=value", path=path, line=lineno)
            key = key.strip()
            value = value.strip()
            if key == "seed":
                values["seed"] = int(value)
            elif key in _NETWORK_KEYS:
                values[key] = _NETWORK_KEYS[key](value)
            elif key in _TRAIN_KEYS:
                values[key] = _TRAIN_KEYS[key](value)
            else:
                raise ParameterError(f"unknown config key {key!r} (line {lineno})")
    return values


def _load_dataset(data_dir: Path):
    pairs = []
    for in_path in sorted(data_dir.glob("*_2d.poseseq")):
        gt_path = in_path.with_name(in_path.name.replace("_2d.", "_3d."))
        if not gt_path.is_file():
            raise FileNotFoundError(f"missing 3D file for {in_path}")
        pairs.append((in_path, gt_path))
    if not pairs:
        raise ParameterError(f"no *_2d.poseseq/*_3d.poseseq pairs in {data_dir}")
    inputs, targets = [], []
    frames = joints = None
    for in_path, gt_path in pairs:
        seq2d, meta2d = load_pose_sequence(in_path)
        seq3d, meta3d = load_pose_sequence(gt_path)
        if meta2d["D"] != 2 or meta3d["D"] != 3:
            raise ParameterError(f"{in_path} / {gt_path}: expected D=2 and D=3")
        if frames is None:
            frames, joints = meta2d["F"], meta2d["J"]
        if (meta2d["F"], meta2d["J"]) != (frames, joints) \
                or (meta3d["F"], meta3d["J"]) != (frames, joints):
            raise ParameterError("dataset mixes F or J across files")
        inputs.append(seq2d.reshape(frames, 2 * joints))
        targets.append(seq3d.reshape(frames, 3 * joints))
    skel_path = data_dir / "skeleton.skel"
    skeleton = load_skeleton(skel_path) if skel_path.is_file() \
        else _skeleton_for(joints)
    return np.stack(inputs), np.stack(targets), skeleton


def cmd_train(args) -> int:
    data_dir = _require_dir(args.data)
    overrides = _read_config_file(_require_file(args.config)) if args.config else {}
    env_seed = os.environ.get("TRAJLIFT_SEED")
    if env_seed is not None:
        overrides["seed"] = int(env_seed)
    seed = overrides.pop("seed", 0)

    inputs, targets, skeleton = _load_dataset(data_dir)
    n, frames, joints = inputs.shape[0], inputs.shape[1], inputs.shape[2] // 2
    if frames != args.frames:
        raise ParameterError(f"data has F={frames}, --frames says {args.frames}")

    net_kwargs = {k: v for k, v in overrides.items() if k in _NETWORK_KEYS}
    train_kwargs = {k: v for k, v in overrides.items() if k in _TRAIN_KEYS}
    net_cfg = NetworkConfig(frames=frames, num_bases=args.num_bases,
                            joints=joints, seed=seed, **net_kwargs)
    train_cfg = TrainConfig(seed=seed, **train_kwargs)

    if args.basis is not None:
        basis = load_basis(_require_file(args.basis))
        if basis.num_frames != frames or basis.num_bases != args.num_bases:
            raise ParameterError(
                f"basis is {basis.num_frames}x{basis.num_bases}, need "
                f"{frames}x{args.num_bases}"
            )
    elif args.family == "svd":
        basis = svd_basis(list(targets), args.num_bases, seed=seed)
    else:
        basis = dct_basis(frames, args.num_bases)

    params = init_network(net_cfg)
    params, loss_log = train(params, basis, inputs, targets, train_cfg,
                             skeleton=skeleton)
    save_checkpoint(args.out, params, basis, skeleton)
    log_path = args.log or (str(args.out) + ".losses.csv")
    with open(log_path, "w") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(loss_log):
            fh.write(f"{epoch},{_fmt(loss)}\n")
    print(f"wrote {args.out}")
    print(f"wrote {log_path}")
    print(f"final_loss={_fmt(loss_log[-1])}")
    return 0


# --- infer --------------------------------------------------------------------


def cmd_infer(args) -> int:
    params, basis, skeleton = load_checkpoint(_require_file(args.model))
    seq2d, meta = load_pose_sequence(_require_file(args.video))
    if meta["D"] != 2:
        raise ParameterError(f"{args.video}: expected a 2D pose sequence")
    if meta["J"] != skeleton.num_joints:
        raise ParameterError(
            f"video has J={meta['J']}, model skeleton has "
            f"J={skeleton.num_joints}"
        )
    video = seq2d.reshape(meta["F"], 2 * meta["J"])
    cfg = SlidingConfig(frames=params.config.frames, step=args.step,
                        flip_average=not args.no_flip)
    poses = sliding_infer(params, basis, video, skeleton, cfg)
    save_pose_sequence(
        args.out, poses.reshape(meta["F"], skeleton.num_joints, 3)
    )
    print(f"wrote {args.out}")
    return 0


# --- eval ---------------------------------------------------------------------


def cmd_eval(args) -> int:
    pred, meta_p = load_pose_sequence(_require_file(args.pred))
    gt, meta_g = load_pose_sequence(_require_file(args.gt))
    skeleton = load_skeleton(_require_file(args.skeleton))
    if meta_p["D"] != 3 or meta_g["D"] != 3:
        raise ParameterError("eval needs 3D pose sequences")
    if pred.shape != gt.shape:
        raise DimensionError(
            f"prediction shape {pred.shape} != ground truth {gt.shape}"
        )
    report = evaluate(
        pred.reshape(meta_p["F"], -1), gt.reshape(meta_g["F"], -1), skeleton
    )
    sys.stdout.write(report.to_text())
    with open(args.out_csv, "w") as fh:
        fh.write(report.per_frame_csv())
    print(f"wrote {args.out_csv}")
    return 0


# --- plot ---------------------------------------------------------------------

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _svg_line_chart(columns: dict[str, list[float]], x_name: str,
                    y_names: list[str], width=640, height=400) -> str:
    margin = 50.0
    xs = columns[x_name]
    x_min, x_max = min(xs), max(xs)
    y_all = [v for name in y_names for v in columns[name]]
    y_min, y_max = min(y_all), max(y_all)
    x_span = (x_max - x_min) or 1.0
    y_span = (y_max - y_min) or 1.0

    def sx(v):
        return margin + (v - x_min) / x_span * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - y_min) / y_span * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{margin}" y="{height - margin + 20}" font-size="12">'
        f'{x_min:g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 20}" '
        f'font-size="12" text-anchor="end">{x_max:g}</text>',
        f'<text x="{margin - 8}" y="{height - margin}" font-size="12" '
        f'text-anchor="end">{y_min:g}</text>',
        f'<text x="{margin - 8}" y="{margin + 4}" font-size="12" '
        f'text-anchor="end">{y_max:g}</text>',
        f'<text x="{width / 2}" y="{height - 12}" font-size="12" '
        f'text-anchor="middle">{x_name}</text>',
    ]
    for i, name in enumerate(y_names):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        points = " ".join(
            f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, columns[name])
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{width - margin}" y="{margin + 16 * i}" '
            f'font-size="12" text-anchor="end" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(args) -> int:
    path = _require_file(args.csv)
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if len(lines) < 2:
        raise ParameterError(f"{path}: need a header and at least one row")
    header = lines[0].split(",")
    columns: dict[str, list[float]] = {name: [] for name in header}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise FormatError(
                f"expected {len(header)} fields, found {len(parts)}",
                path=path, line=lineno,
            )
        for name, value in zip(header, parts):
            try:
                columns[name].append(float(value))
            except ValueError:
                raise FormatError(f"non-numeric value {value!r}",
                                  path=path, line=lineno)
    x_name = args.x or header[0]
    y_names = args.y or [h for h in header if h != x_name]
    for name in [x_name] + y_names:
        if name not in columns:
            raise ParameterError(f"no column named {name!r}")
    with open(args.out, "w") as fh:
        fh.write(_svg_line_chart(columns, x_name, y_names))
    print(f"wrote {args.out}")
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajlift",
        description="2D-to-3D pose lifting in trajectory space",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bases", help="construct and save a trajectory basis")
    p.add_argument("--family", choices=("dct", "svd"), required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--num-bases", type=int, required=True)
    p.add_argument("--corpus", help="directory of 3D pose sequences (svd)")
    p.add_argument("--max-columns", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bases)

    p = sub.add_parser("analyze",
                       help="coefficient spectrum and truncation error CSVs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--basis", required=True)
    p.add_argument("--max-k", type=int, required=True)
    p.add_argument("--out-prefix", default="analysis")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic lifting dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--num-sequences", type=int, required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--joints", type=int, default=17)
    p.add_argument("--band-limit", type=int, required=True)
    p.add_argument("--amplitude", type=float, default=100.0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--camera", choices=("pinhole", "orthographic"),
                   default="pinhole")
    p.add_argument("--focal", type=float, default=1100.0)
    p.add_argument("--image-size", type=float, default=1000.0)
    p.add_argument("--depth", type=float, default=4500.0)
    p.add_argument("--independent-z", action="store_true",
                   help="draw Z coefficients independently of X/Y")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a lifting model")
    p.add_argument("--data", required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--num-bases", type=int, required=True)
    p.add_argument("--config", help="key=value hyperparameter file")
    p.add_argument("--family", choices=("dct", "svd"), default="dct")
    p.add_argument("--basis", help="pretrained basis file (overrides --family)")
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="loss log CSV (default <out>.losses.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="lift a 2D video with sliding windows")
    p.add_argument("--model", required=True)
    p.add_argument("--video", required=True)
    p.add_argument("--step", type=int, default=5)
    p.add_argument("--no-flip", action="store_true",
                   help="disable test-time flip averaging")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="score a prediction against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--skeleton", required=True)
    p.add_argument("--out-csv", default="perframe.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="render a CSV as an SVG line chart")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--x", help="x column (default: first)")
    p.add_argument("--y", nargs="*", help="y columns (default: all others)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (DimensionError, ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
