import math

import numpy as np
import numpy.testing as npt
import pytest

from trajlift.bases import (
    TrajectoryBasis,
    coefficient_magnitude_profile,
    cosine_table,
    dct_basis,
    dct_forward,
    load_basis,
    project_motion,
    reconstruct_motion,
    save_basis,
    svd_basis,
    truncation_error_profile,
)
from trajlift.errors import (
    DimensionError,
    FormatError,
    NumericError,
    ParameterError,
)
from trajlift.io import SynthConfig, synth_motion, synth_motion_corpus


def random_motion(frames, joints, seed):
    return np.random.default_rng(seed).normal(size=(frames, 3 * joints))


class TestDctBasis:
    def test_f2_values(self):
        theta = dct_basis(2, 2).theta
        npt.assert_allclose(theta[:, 0], [0.5, 0.5])
        npt.assert_allclose(
            theta[:, 1], [math.cos(math.pi / 4), math.cos(3 * math.pi / 4)]
        )
        npt.assert_allclose(theta[:, 1], [0.70711, -0.70711], atol=5e-6)

    def test_column0_constant_half(self):
        for frames in (1, 3, 50):
            theta = dct_basis(frames, 1).theta
            npt.assert_array_equal(theta[:, 0], np.full(frames, 0.5))

    def test_smooth_half_cosine_shape(self):
        # column k crosses zero k times and starts positive
        theta = dct_basis(50, 3).theta
        for k in (1, 2):
            col = theta[:, k]
            assert col[0] > 0
            crossings = np.sum(np.diff(np.sign(col)) != 0)
            assert crossings == k

    def test_parameter_errors(self):
        with pytest.raises(ParameterError):
            dct_basis(4, 5)
        with pytest.raises(ParameterError):
            dct_basis(4, 0)

    def test_gram_identities(self):
        # raw cosines: <c_k, c_k'> = 0 (k != k'), F/2 (k = k' >= 1), F (k = k' = 0)
        for frames in (2, 10, 50):
            table = cosine_table(frames, frames)
            gram = table.T @ table
            expected = np.diag([frames] + [frames / 2.0] * (frames - 1))
            npt.assert_allclose(gram, expected, atol=1e-10)


class TestDctForward:
    def test_constant_signal(self):
        basis = dct_basis(4, 4)
        coeffs = dct_forward(np.ones(4), basis)
        npt.assert_allclose(coeffs, [2.0, 0, 0, 0], atol=1e-12)
        # synthesis recovers the constant through the halved DC column
        npt.assert_allclose(basis.theta @ coeffs, np.ones(4), atol=1e-12)

    def test_alternating_signal(self):
        basis = dct_basis(2, 2)
        coeffs = dct_forward(np.array([1.0, -1.0]), basis)
        npt.assert_allclose(coeffs, [0.0, math.sqrt(2)], atol=1e-12)

    def test_zero_signal(self):
        basis = dct_basis(6, 6)
        npt.assert_array_equal(dct_forward(np.zeros(6), basis), np.zeros(6))

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            dct_forward(np.zeros(5), dct_basis(4, 4))

    def test_requires_dct_family(self):
        motions = [random_motion(6, 2, s) for s in range(3)]
        basis = svd_basis(motions, 3)
        with pytest.raises(ParameterError):
            dct_forward(np.zeros(6), basis)


class TestProjectReconstruct:
    def test_zero_coeffs_zero_motion(self):
        basis = dct_basis(5, 3)
        npt.assert_array_equal(
            reconstruct_motion(basis, np.zeros((3, 6))), np.zeros((5, 6))
        )

    def test_k1_constant_trajectory(self):
        basis = dct_basis(5, 1)
        coeffs = np.array([[4.0, 0.0]])
        recon = reconstruct_motion(basis, coeffs)
        npt.assert_allclose(recon[:, 0], np.full(5, 2.0))
        npt.assert_array_equal(recon[:, 1], np.zeros(5))

    @pytest.mark.parametrize("frames", [2, 10, 25, 50])
    def test_full_round_trip(self, frames):
        basis = dct_basis(frames, frames)
        motion = random_motion(frames, 4, seed=frames)
        recon = reconstruct_motion(basis, project_motion(motion, basis))
        rel = np.abs(recon - motion).max() / np.abs(motion).max()
        assert rel < 1e-9

    def test_recovers_known_coefficients(self):
        basis = dct_basis(8, 3)
        a0 = np.random.default_rng(1).normal(size=(3, 9))
        motion = reconstruct_motion(basis, a0)
        npt.assert_allclose(project_motion(motion, basis), a0, atol=1e-9)

    def test_least_squares_oracle(self):
        # independent oracle: numpy lstsq on the same overdetermined system
        basis = dct_basis(12, 5)
        motion = random_motion(12, 3, seed=2)
        expected, *_ = np.linalg.lstsq(basis.theta, motion, rcond=None)
        npt.assert_allclose(project_motion(motion, basis), expected, atol=1e-9)

    def test_residual_orthogonal_to_basis(self):
        basis = dct_basis(10, 4)
        motion = random_motion(10, 5, seed=3)
        residual = motion - reconstruct_motion(basis, project_motion(motion, basis))
        npt.assert_allclose(basis.theta.T @ residual, 0, atol=1e-8)

    def test_zero_motion_zero_coeffs(self):
        basis = dct_basis(7, 3)
        npt.assert_array_equal(project_motion(np.zeros((7, 6)), basis),
                               np.zeros((3, 6)))

    def test_perturbing_coefficients_increases_residual(self):
        basis = dct_basis(9, 4)
        motion = random_motion(9, 2, seed=4)
        coeffs = project_motion(motion, basis)
        best = np.linalg.norm(basis.theta @ coeffs - motion)
        rng = np.random.default_rng(5)
        for _ in range(10):
            bumped = coeffs.copy()
            k = rng.integers(coeffs.shape[0])
            c = rng.integers(coeffs.shape[1])
            bumped[k, c] += rng.choice([-1e-3, 1e-3])
            assert np.linalg.norm(basis.theta @ bumped - motion) > best

    def test_dimension_errors(self):
        basis = dct_basis(6, 3)
        with pytest.raises(DimensionError):
            project_motion(np.zeros((5, 6)), basis)
        with pytest.raises(DimensionError):
            reconstruct_motion(basis, np.zeros((4, 6)))


class TestSvdBasis:
    def test_rank_one_corpus(self):
        t = np.sin(np.linspace(0, 2, 10))
        motions = [np.outer(t, np.arange(1, 7))]
        basis = svd_basis(motions, 1)
        unit = t / np.linalg.norm(t)
        sign = np.sign(unit[np.argmax(np.abs(unit))])
        npt.assert_allclose(basis.theta[:, 0], unit * sign, atol=1e-12)
        recon = reconstruct_motion(basis, project_motion(motions[0], basis))
        npt.assert_allclose(recon, motions[0], atol=1e-9)

    def test_orthonormal_columns(self):
        motions = [random_motion(12, 4, s) for s in range(5)]
        basis = svd_basis(motions, 6)
        npt.assert_allclose(basis.theta.T @ basis.theta, np.eye(6), atol=1e-10)

    def test_deterministic_and_sign_fixed(self):
        motions = [random_motion(8, 3, s) for s in range(4)]
        a = svd_basis(motions, 4)
        b = svd_basis(motions, 4)
        npt.assert_array_equal(a.theta, b.theta)
        for k in range(4):
            col = a.theta[:, k]
            assert col[np.argmax(np.abs(col))] > 0

    def test_subsampling_is_seeded(self):
        motions = [random_motion(8, 3, s) for s in range(4)]
        a = svd_basis(motions, 3, max_columns=10, seed=42)
        b = svd_basis(motions, 3, max_columns=10, seed=42)
        npt.assert_array_equal(a.theta, b.theta)

    def test_insufficient_columns(self):
        with pytest.raises(ParameterError):
            svd_basis([np.zeros((6, 3))], 4)

    def test_non_finite_rejected(self):
        bad = np.zeros((5, 3))
        bad[2, 1] = np.nan
        with pytest.raises(NumericError):
            svd_basis([bad], 1)

    def test_beats_dct_at_equal_k_on_training_data(self):
        # Eckart-Young: the fitted subspace is optimal for its own corpus
        motions = [synth_motion(SynthConfig(16, 3, 12, seed=s)) for s in range(8)]
        dct_profile = dict(truncation_error_profile(motions, "dct", range(1, 9)))
        svd_profile = dict(truncation_error_profile(motions, "svd", range(1, 9)))
        for k in range(1, 9):
            assert svd_profile[k] <= dct_profile[k] + 1e-9


class TestProfiles:
    def test_truncation_zero_at_full_k(self):
        motions = [random_motion(10, 2, s) for s in range(3)]
        profile = dict(truncation_error_profile(motions, "dct"))
        assert profile[10] < 1e-9

    def test_band_limited_motion_exact_beyond_band(self):
        cfg = SynthConfig(frames=20, joints=2, band_limit=6, seed=1)
        motions = [synth_motion(cfg)]
        profile = dict(truncation_error_profile(motions, "dct"))
        for k in range(6, 21):
            assert profile[k] < 1e-9

    def test_monotone_non_increasing_on_random_corpora(self):
        for seed in range(5):
            motions = [random_motion(12, 3, seed * 10 + i) for i in range(4)]
            errors = [e for _, e in truncation_error_profile(motions, "dct")]
            assert all(a >= b - 1e-12 for a, b in zip(errors, errors[1:]))

    def test_empty_corpus_rejected(self):
        with pytest.raises(DimensionError):
            truncation_error_profile([], "dct")

    def test_magnitude_profile_band_limited(self):
        cfg = SynthConfig(frames=16, joints=2, band_limit=5, seed=2)
        motions = [synth_motion(cfg) for _ in range(1)]
        basis = dct_basis(16, 16)
        profile = coefficient_magnitude_profile(motions, basis)
        for k, value in profile:
            if k >= 5:
                assert value < 1e-12

    def test_magnitude_profile_constant_motion(self):
        motions = [np.ones((10, 6)) * 3.0]
        basis = dct_basis(10, 10)
        profile = coefficient_magnitude_profile(motions, basis)
        assert profile[0][1] == pytest.approx(6.0)  # DC coefficient 2 * mean
        for k, value in profile[1:]:
            assert value < 1e-12

    def test_magnitude_profile_decays_for_smooth_walks(self):
        rng = np.random.default_rng(8)
        motions = []
        for _ in range(20):
            steps = rng.normal(size=(30, 6))
            walk = np.cumsum(steps, axis=0)
            # extra smoothing strengthens the low-frequency content
            kernel = np.ones(5) / 5.0
            smooth = np.apply_along_axis(
                lambda c: np.convolve(c, kernel, mode="same"), 0, walk
            )
            motions.append(smooth)
        basis = dct_basis(30, 30)
        profile = [v for _, v in coefficient_magnitude_profile(motions, basis)]
        low = np.mean(profile[1:6])
        high = np.mean(profile[20:])
        assert high < 0.2 * low


class TestBasisFiles:
    def test_round_trip(self, tmp_path):
        basis = dct_basis(7, 4)
        path = tmp_path / "basis.txt"
        save_basis(path, basis)
        loaded = load_basis(path)
        assert loaded.family == "dct"
        npt.assert_array_equal(loaded.theta, basis.theta)

    def test_svd_round_trip(self, tmp_path):
        motions = [random_motion(6, 2, s) for s in range(3)]
        basis = svd_basis(motions, 3)
        path = tmp_path / "b.txt"
        save_basis(path, basis)
        loaded = load_basis(path)
        assert loaded.family == "svd"
        npt.assert_array_equal(loaded.theta, basis.theta)

    def test_header_content(self, tmp_path):
        path = tmp_path / "b.txt"
        save_basis(path, dct_basis(50, 8))
        assert path.read_text().splitlines()[0] == "TRAJBASIS v1 family=DCT F=50 K=8"

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("TRAJBASIS v2 family=DCT F=2 K=1\n0.5\n0.5\n")
        with pytest.raises(FormatError):
            load_basis(path)

    def test_row_count_mismatch_names_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text(
            "TRAJBASIS v1 family=DCT F=2 K=1\n0.5\n0.5\n0.5\n"
        )
        with pytest.raises(FormatError) as err:
            load_basis(path)
        assert err.value.line == 4

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("TRAJBASIS v1 family=DCT F=2 K=1\n0.5\nfoo\n")
        with pytest.raises(FormatError) as err:
            load_basis(path)
        assert err.value.line == 3


class TestBasisType:
    def test_truncated_is_nested(self):
        basis = dct_basis(10, 6)
        sub = basis.truncated(3)
        npt.assert_array_equal(sub.theta, basis.theta[:, :3])
        assert sub.family == "dct"

    def test_k_greater_than_f_rejected(self):
        with pytest.raises(ParameterError):
            TrajectoryBasis(np.zeros((3, 4)), "dct")
