"""Trajectory bases: cosine and data-driven families.

A basis is an (F, K) matrix whose columns span low-frequency temporal
signals. A motion matrix S (F x 3J) is approximated as S = theta @ A with a
(K x 3J) coefficient matrix A. Two families are supported:

* ``dct``: column 0 is the constant 0.5, column k >= 1 holds
  cos[(pi/F)(f + 1/2) k]. Analysis uses the 2/F scale so that
  projection followed by reconstruction is exact at K = F.
* ``svd``: leading left singular vectors of a corpus of stacked motion
  matrices; columns are orthonormal.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FormatError, NumericError, ParameterError

FAMILIES = ("dct", "svd")


@dataclass(frozen=True)
class TrajectoryBasis:
    theta: np.ndarray = field(repr=False)  # (F, K), columns are basis vectors
    family: str

    def __post_init__(self):
        theta = np.ascontiguousarray(self.theta, dtype=float)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        if theta.ndim != 2:
            raise DimensionError("basis matrix must be 2-D")
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown basis family {self.family!r}")
        if theta.shape[1] > theta.shape[0]:
            raise ParameterError(
                f"K={theta.shape[1]} exceeds F={theta.shape[0]}"
            )

    @property
    def num_frames(self) -> int:
        return self.theta.shape[0]

    @property
    def num_bases(self) -> int:
        return self.theta.shape[1]

    def truncated(self, k: int) -> "TrajectoryBasis":
        """First k columns as a new basis (both families are nested)."""
        if not 1 <= k <= self.num_bases:
            raise ParameterError(f"k={k} outside [1, {self.num_bases}]")
        return TrajectoryBasis(self.theta[:, :k], self.family)


def cosine_table(frames: int, num_bases: int) -> np.ndarray:
    """Raw cosine table C[f, k] = cos[(pi/F)(f + 1/2) k]; column 0 is ones."""
    f = np.arange(frames, dtype=float)[:, None]
    k = np.arange(num_bases, dtype=float)[None, :]
    return np.cos(np.pi / frames * (f + 0.5) * k)


def dct_basis(frames: int, num_bases: int) -> TrajectoryBasis:
    """Cosine basis with the synthesis weighting (column 0 halved)."""
    if frames < 1:
        raise ParameterError(f"frames must be >= 1, got {frames}")
    if not 1 <= num_bases <= frames:
        raise ParameterError(
            f"num_bases must be in [1, {frames}], got {num_bases}"
        )
    theta = cosine_table(frames, num_bases)
    theta[:, 0] = 0.5
    return TrajectoryBasis(theta, "dct")


def _analysis_matrix(basis: TrajectoryBasis) -> np.ndarray:
    """(K, F) matrix mapping signals to least-squares coefficients."""
    if basis.family == "dct":
        raw = np.array(basis.theta)
        raw[:, 0] *= 2.0  # recover the all-ones column from the stored 0.5
        return (2.0 / basis.num_frames) * raw.T
    return basis.theta.T


def dct_forward(signal: np.ndarray, basis: TrajectoryBasis) -> np.ndarray:
    """Cosine coefficients of a length-F signal, scaled by 2/F."""
    if basis.family != "dct":
        raise ParameterError("dct_forward requires a dct-family basis")
    signal = np.asarray(signal, dtype=float)
    if signal.shape != (basis.num_frames,):
        raise DimensionError(
            f"signal length {signal.shape} does not match F={basis.num_frames}"
        )
    return _analysis_matrix(basis) @ signal


def project_motion(motion: np.ndarray, basis: TrajectoryBasis) -> np.ndarray:
    """Least-squares coefficients A = argmin ||theta @ A - S||_F.

    For the dct family this equals the 2/F-scaled cosine transform of each
    column; for svd it is a plain orthonormal projection.
    """
    motion = np.asarray(motion, dtype=float)
    if motion.ndim != 2 or motion.shape[0] != basis.num_frames:
        raise DimensionError(
            f"motion shape {motion.shape} does not match basis F={basis.num_frames}"
        )
    return _analysis_matrix(basis) @ motion


def reconstruct_motion(basis: TrajectoryBasis, coeffs: np.ndarray) -> np.ndarray:
    """Synthesize S = theta @ A from trajectory coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape[0] != basis.num_bases:
        raise DimensionError(
            f"coefficient shape {coeffs.shape} does not match basis K={basis.num_bases}"
        )
    return basis.theta @ coeffs


def svd_basis(
    motions,
    num_bases: int,
    max_columns: int | None = 10_000,
    seed: int = 0,
) -> TrajectoryBasis:
    """Leading left singular vectors of horizontally stacked motion matrices.

    All motions must share F. When the stack holds more than ``max_columns``
    trajectories, a seeded subsample (order-preserving) is taken first.
    Each column's sign is fixed so its largest-magnitude entry is positive,
    making the result reproducible across platforms.
    """
    motions = [np.asarray(m, dtype=float) for m in motions]
    if not motions:
        raise DimensionError("need at least one motion matrix")
    frames = motions[0].shape[0]
    for m in motions:
        if m.ndim != 2 or m.shape[0] != frames:
            raise DimensionError("all motions must share the frame count F")
    stacked = np.hstack(motions)
    if not np.all(np.isfinite(stacked)):
        raise NumericError("motion corpus contains non-finite values")
    total = stacked.shape[1]
    if not 1 <= num_bases <= min(frames, total):
        raise ParameterError(
            f"num_bases must be in [1, min(F={frames}, columns={total})]"
        )
    if max_columns is not None and total > max_columns:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(total, size=max_columns, replace=False))
        stacked = stacked[:, keep]
    u, _, _ = np.linalg.svd(stacked, full_matrices=False)
    theta = u[:, :num_bases].copy()
    for k in range(theta.shape[1]):
        col = theta[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            theta[:, k] = -col
    return TrajectoryBasis(theta, "svd")


def _residual_stats(motion: np.ndarray, basis: TrajectoryBasis):
    """(sum of per-joint errors, count) after project + reconstruct."""
    recon = reconstruct_motion(basis, project_motion(motion, basis))
    diff = (recon - motion).reshape(motion.shape[0], -1, 3)
    norms = np.linalg.norm(diff, axis=2)
    return norms.sum(), norms.size


def truncation_error_profile(motions, family: str = "dct", k_range=None):
    """Mean per-joint-per-frame reconstruction error as bases are truncated.

    Returns a list of (K, error) pairs, one per K in ``k_range`` (default
    1..F). For the svd family the basis is fitted on ``motions`` itself.
    """
    motions = [np.asarray(m, dtype=float) for m in motions]
    if not motions:
        raise DimensionError("need a nonempty motion corpus")
    frames = motions[0].shape[0]
    for m in motions:
        if m.ndim != 2 or m.shape[0] != frames:
            raise DimensionError("all motions must share the frame count F")
    if k_range is None:
        k_range = range(1, frames + 1)
    k_values = sorted(set(int(k) for k in k_range))
    if not k_values or k_values[0] < 1 or k_values[-1] > frames:
        raise ParameterError(f"K range must lie within [1, {frames}]")
    k_max = k_values[-1]
    if family == "dct":
        full = dct_basis(frames, k_max)
    elif family == "svd":
        full = svd_basis(motions, k_max, max_columns=None)
    else:
        raise ParameterError(f"unknown basis family {family!r}")
    profile = []
    for k in k_values:
        basis = full.truncated(k)
        total, count = 0.0, 0
        for m in motions:
            s, n = _residual_stats(m, basis)
            total += s
            count += n
        profile.append((k, total / count))
    return profile


def coefficient_magnitude_profile(motions, basis: TrajectoryBasis):
    """Mean absolute coefficient per basis index over a corpus.

    Entry k averages |A[k, :]| over every trajectory column of every motion.
    Index 0 is the DC term; callers plotting spectra usually drop it.
    """
    motions = [np.asarray(m, dtype=float) for m in motions]
    if not motions:
        raise DimensionError("need a nonempty motion corpus")
    sums = np.zeros(basis.num_bases)
    count = 0
    for m in motions:
        coeffs = project_motion(m, basis)
        sums += np.abs(coeffs).sum(axis=1)
        count += coeffs.shape[1]
    return [(k, sums[k] / count) for k in range(basis.num_bases)]


def save_basis(path, basis: TrajectoryBasis) -> None:
    """Write the TRAJBASIS v1 text format (round-trip exact)."""
    lines = [
        f"TRAJBASIS v1 family={basis.family.upper()} "
        f"F={basis.num_frames} K={basis.num_bases}"
    ]
    for row in basis.theta:
        lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_basis(path) -> TrajectoryBasis:
    """Read a TRAJBASIS v1 file; validates the header and every row."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty basis file", path=path, line=1)
    head = lines[0].split()
    if len(head) != 5 or head[0] != "TRAJBASIS" or head[1] != "v1":
        raise FormatError("expected 'TRAJBASIS v1 family=.. F=.. K=..'",
                          path=path, line=1)
    fields = {}
    for token in head[2:]:
        key, _, value = token.partition("=")
        fields[key] = value
    try:
        family = fields["family"].lower()
        frames = int(fields["F"])
        num_bases = int(fields["K"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad header field: {exc}", path=path, line=1)
    if family not in FAMILIES:
        raise FormatError(f"unknown family {fields['family']!r}", path=path, line=1)
    data = lines[1:]
    if len(data) != frames:
        # line of the first surplus row, or of the first missing one
        bad = frames + 2 if len(data) > frames else len(data) + 2
        raise FormatError(
            f"expected {frames} rows, found {len(data)}", path=path, line=bad
        )
    theta = np.empty((frames, num_bases))
    for i, line in enumerate(data):
        parts = line.split()
        if len(parts) != num_bases:
            raise FormatError(
                f"expected {num_bases} values, found {len(parts)}",
                path=path, line=i + 2,
            )
        try:
            theta[i] = [float(p) for p in parts]
        except ValueError:
            raise FormatError("non-numeric value", path=path, line=i + 2)
    return TrajectoryBasis(theta, family)
