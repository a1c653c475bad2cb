import numpy as np
import pytest

from blindmd.numerics import (
    SingularSystemError,
    build_dft_submatrix,
    regularized_ls_channel,
    top_left_singular_vectors,
)

from conftest import make_rng


class TestBuildDftSubmatrix:
    def test_zero_delay_is_all_ones(self):
        f = build_dft_submatrix(8, [0])
        assert np.allclose(f.columns[:, 0], np.ones(8))

    def test_fourth_roots_of_unity(self):
        f = build_dft_submatrix(4, [1])
        assert np.allclose(f.columns[:, 0], [1, -1j, -1, 1j])

    def test_columns_orthogonal_direct_sum_oracle(self):
        f = build_dft_submatrix(1024, [0, 1, 2, 3])
        # independent oracle: sum the geometric series term by term
        w = np.exp(-2j * np.pi / 1024)
        acc = sum(np.conj(w ** (m * 0)) * w ** (m * 1) for m in range(1024))
        assert abs(acc) < 1e-9
        assert abs(np.vdot(f.columns[:, 0], f.columns[:, 1])) < 1e-9

    def test_column_norms(self):
        f = build_dft_submatrix(64, [0, 5, 9])
        assert np.allclose(np.sum(np.abs(f.columns) ** 2, axis=0), 64)

    @pytest.mark.parametrize("trial", range(10))
    def test_gram_identity_random_delays(self, trial):
        rng = make_rng("dft-gram", trial)
        n = int(rng.integers(8, 300))
        k = int(rng.integers(1, min(n, 6)))
        delays = rng.choice(n, size=k, replace=False)
        f = build_dft_submatrix(n, delays)
        gram = f.columns.conj().T @ f.columns
        assert np.linalg.norm(gram - n * np.eye(k)) <= 1e-9 * n

    def test_duplicate_delay_rejected(self):
        with pytest.raises(ValueError, match="duplicate delay 3"):
            build_dft_submatrix(8, [1, 3, 3])

    def test_out_of_range_delay_rejected(self):
        with pytest.raises(ValueError, match="delay 8"):
            build_dft_submatrix(8, [0, 8])


class TestTopLeftSingularVectors:
    def test_rank_one(self):
        rng = make_rng("svd-rank1")
        a = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        basis = top_left_singular_vectors(np.outer(a, b), 2)
        u1 = basis.vector(0)
        corr = abs(np.vdot(u1, a / np.linalg.norm(a)))
        assert corr == pytest.approx(1.0, abs=1e-10)
        assert basis.singular_values[0] == pytest.approx(
            np.linalg.norm(a) * np.linalg.norm(b), rel=1e-10
        )
        assert basis.singular_values[1] == pytest.approx(0.0, abs=1e-10)

    def test_padded_diagonal(self):
        y = np.zeros((6, 3), dtype=complex)
        y[0, 0], y[1, 1], y[2, 2] = 3.0, 2.0, 1.0
        basis = top_left_singular_vectors(y, 3)
        assert np.allclose(basis.singular_values, [3.0, 2.0, 1.0])

    def test_full_reconstruction_oracle(self):
        rng = make_rng("svd-recon")
        y = rng.standard_normal((64, 16)) + 1j * rng.standard_normal((64, 16))
        basis = top_left_singular_vectors(y, 16)
        # right vectors recovered from the returned left triplets
        v = (y.conj().T @ basis.left_vectors) / basis.singular_values
        recon = (basis.left_vectors * basis.singular_values) @ v.conj().T
        assert np.linalg.norm(recon - y) <= 1e-8 * np.linalg.norm(y)

    def test_energy_identity(self):
        rng = make_rng("svd-energy")
        y = rng.standard_normal((100, 12)) + 1j * rng.standard_normal((100, 12))
        basis = top_left_singular_vectors(y, 12)
        assert np.sum(basis.singular_values**2) == pytest.approx(
            np.linalg.norm(y) ** 2, rel=1e-8
        )

    def test_orthonormal_within_tolerance(self):
        rng = make_rng("svd-ortho")
        y = rng.standard_normal((256, 24)) + 1j * rng.standard_normal((256, 24))
        basis = top_left_singular_vectors(y, 8)
        gram = basis.left_vectors.conj().T @ basis.left_vectors
        assert np.linalg.norm(gram - np.eye(8)) < 1e-9

    @pytest.mark.parametrize("k", [0, 17])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError, match="k="):
            top_left_singular_vectors(np.ones((64, 16)), k)


class TestRegularizedLsChannel:
    def test_exact_recovery_orthogonal_columns(self):
        rng = make_rng("ls-exact")
        f = build_dft_submatrix(32, [0])
        h = rng.standard_normal((1, 4)) + 1j * rng.standard_normal((1, 4))
        y = f.columns @ h
        est = regularized_ls_channel(np.ones(32), f, y, 0.0)
        assert np.allclose(est, h, atol=1e-12)

    def test_small_mu_continuity(self):
        rng = make_rng("ls-cont")
        f = build_dft_submatrix(64, [0, 3, 7])
        x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        y = rng.standard_normal((64, 8)) + 1j * rng.standard_normal((64, 8))
        a = regularized_ls_channel(x, f, y, 0.0)
        b = regularized_ls_channel(x, f, y, 1e-12)
        assert np.linalg.norm(a - b) <= 1e-6 * np.linalg.norm(a)

    def test_noiseless_recovery_with_regularization(self):
        rng = make_rng("ls-reg")
        n, l, n_r = 1024, 4, 8
        f = build_dft_submatrix(n, range(l))
        x = np.exp(2j * np.pi * rng.random(n))
        h = rng.standard_normal((l, n_r)) + 1j * rng.standard_normal((l, n_r))
        y = (x[:, None]) * (f.columns @ h)
        est = regularized_ls_channel(x, f, y, 0.1)
        assert np.linalg.norm(est - h) / np.linalg.norm(h) < 1e-3

    def test_matches_pseudo_inverse_oracle(self):
        for trial in range(20):
            rng = make_rng("ls-pinv", trial)
            n = int(rng.integers(8, 65))
            l = int(rng.integers(1, 5))
            n_r = int(rng.integers(1, 9))
            delays = rng.choice(n, size=l, replace=False)
            f = build_dft_submatrix(n, delays)
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            y = rng.standard_normal((n, n_r)) + 1j * rng.standard_normal((n, n_r))
            oracle = np.linalg.pinv(x[:, None] * f.columns) @ y
            est = regularized_ls_channel(x, f, y, 0.0)
            assert np.linalg.norm(est - oracle) <= 1e-8 * max(np.linalg.norm(oracle), 1)

    def test_singular_system_raises(self):
        f = build_dft_submatrix(16, [0, 1])
        y = np.ones((16, 2), dtype=complex)
        with pytest.raises(SingularSystemError):
            regularized_ls_channel(np.zeros(16), f, y, 0.0)

    def test_negative_mu_rejected(self):
        f = build_dft_submatrix(16, [0])
        with pytest.raises(ValueError, match="mu"):
            regularized_ls_channel(np.ones(16), f, np.ones((16, 2)), -1.0)
