import json

import numpy as np
import pytest
from scipy.integrate import quad

from blindmd.channel import (
    DEFAULT_CARRIER_HZ,
    apply_channel,
    doppler_shift_hz,
    evolve_channel,
    exponential_corr,
    load_pdp,
    make_pdp,
    sample_time_channel,
    temporal_coefficient,
)
from blindmd.numerics import build_dft_submatrix
from blindmd.waveform import PilotSpec, build_tx_symbol, default_pilots

from conftest import make_rng


class TestExponentialCorr:
    def test_zero_coefficient_identity(self):
        c = exponential_corr(4, 0.0)
        assert np.array_equal(c.matrix, np.eye(4))
        assert np.array_equal(c.sqrt_factor, np.eye(4))

    def test_point_seven_entries(self):
        c = exponential_corr(3, 0.7)
        assert np.allclose(c.matrix, [[1, 0.7, 0.49], [0.7, 1, 0.7], [0.49, 0.7, 1]])

    @pytest.mark.parametrize("r", [0.1, 0.5, 0.7, 0.95])
    def test_psd_and_sqrt(self, r):
        c = exponential_corr(16, r)
        assert np.linalg.eigvalsh(c.matrix).min() >= -1e-10
        assert np.linalg.norm(c.sqrt_factor @ c.sqrt_factor.conj().T - c.matrix) < 1e-9

    @pytest.mark.parametrize("r", [-0.1, 1.0, 1.5])
    def test_invalid_coefficient(self, r):
        with pytest.raises(ValueError):
            exponential_corr(4, r)


class TestPowerDelayProfiles:
    def test_ped4_registry(self):
        pdp = load_pdp("ped4")
        assert pdp.delays == (0, 1, 2, 3)
        assert pdp.powers.sum() == pytest.approx(1.0, abs=1e-12)
        assert pdp.dominant_delay == 0
        assert pdp.powers[0] > 5 * pdp.powers[1]

    def test_ped4_rotations(self):
        for d in range(4):
            assert load_pdp(f"ped4-dom{d}").dominant_delay == d

    def test_tdla30(self):
        pdp = load_pdp("tdla30-4096")
        assert len(pdp.taps) == 12
        assert pdp.delays == tuple(range(12))
        assert np.all(np.diff(pdp.powers) < 0)  # exponential decay, leading tap dominant

    def test_json_file(self, tmp_path):
        path = tmp_path / "two_tap.json"
        path.write_text(json.dumps([
            {"delay_samples": 0, "power_linear": 3.0},
            {"delay_samples": 5, "power_linear": 1.0},
        ]))
        pdp = load_pdp(str(path))
        assert pdp.delays == (0, 5)
        assert np.allclose(pdp.powers, [0.75, 0.25])

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown power delay profile"):
            load_pdp("no-such-profile")

    def test_unsorted_delays_rejected(self):
        with pytest.raises(ValueError, match="ascending"):
            make_pdp([3, 0], [0.5, 0.5])


class TestSampleTimeChannel:
    def test_single_tap_variance(self):
        rng = make_rng("chan-var")
        pdp = make_pdp([0], [1.0])
        corr = exponential_corr(1, 0.0)
        draws = np.array([sample_time_channel(pdp, corr, rng).h[0, 0] for _ in range(100_000)])
        assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, rel=0.02)

    def test_row_energy_matches_profile(self):
        rng = make_rng("chan-rows")
        pdp = load_pdp("ped4")
        corr = exponential_corr(8, 0.0)
        acc = np.zeros(4)
        n = 10_000
        for _ in range(n):
            acc += np.sum(np.abs(sample_time_channel(pdp, corr, rng).h) ** 2, axis=1)
        assert np.allclose(acc / n, pdp.powers * 8, rtol=0.05)

    def test_adjacent_antenna_correlation(self):
        rng = make_rng("chan-corr")
        pdp = make_pdp([0], [1.0])
        corr = exponential_corr(4, 0.7)
        a = np.empty(100_000, dtype=complex)
        b = np.empty(100_000, dtype=complex)
        for i in range(a.size // 100):
            h = np.stack([sample_time_channel(pdp, corr, rng).h[0] for _ in range(100)])
            a[i * 100 : (i + 1) * 100] = h[:, 0]
            b[i * 100 : (i + 1) * 100] = h[:, 1]
        rho = np.vdot(a, b).real / np.sqrt(np.vdot(a, a).real * np.vdot(b, b).real)
        assert rho == pytest.approx(0.7, abs=0.035)


class TestTemporalCoefficient:
    def test_zero_lag(self):
        assert temporal_coefficient(100.0, 0, 1e-3) == 1.0

    def test_against_integral_oracle(self):
        # Bessel J0 via its integral representation
        for x in [0.1, 0.7, 1.3, 2.2]:
            oracle, _ = quad(lambda t: np.cos(x * np.sin(t)) / np.pi, 0, np.pi, epsabs=1e-13)
            f_d, t_sym = x / (2 * np.pi), 1.0
            assert temporal_coefficient(f_d, 1, t_sym) == pytest.approx(oracle, abs=1e-10)

    @pytest.mark.parametrize(
        "speed,t_ms,target",
        [(5.0, 5.0, 0.96), (5.0, 10.0, 0.87), (10.0, 5.0, 0.87), (10.0, 10.0, 0.53)],
    )
    def test_mobility_table(self, speed, t_ms, target):
        eta = temporal_coefficient(doppler_shift_hz(speed, DEFAULT_CARRIER_HZ), 1, t_ms * 1e-3)
        assert abs(eta - target) <= 0.01

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            temporal_coefficient(-1.0, 1, 1e-3)


class TestEvolveChannel:
    def setup_method(self):
        self.pdp = load_pdp("ped4")
        self.corr = exponential_corr(4, 0.0)

    def test_eta_one_identity(self):
        rng = make_rng("evolve-1")
        h0 = sample_time_channel(self.pdp, self.corr, rng)
        h1 = evolve_channel(h0, 1.0, self.corr, self.pdp, rng)
        assert np.array_equal(h1.h, h0.h)

    @pytest.mark.parametrize("eta,tol", [(0.0, 0.02), (0.87, 0.02)])
    def test_sample_correlation(self, eta, tol):
        rng = make_rng("evolve", int(eta * 100))
        x = []
        y = []
        for _ in range(10_000):
            h0 = sample_time_channel(self.pdp, self.corr, rng)
            hk = evolve_channel(h0, eta, self.corr, self.pdp, rng)
            x.append(h0.h[0, 0])
            y.append(hk.h[0, 0])
        x, y = np.asarray(x), np.asarray(y)
        rho = np.vdot(x, y).real / np.sqrt(np.vdot(x, x).real * np.vdot(y, y).real)
        assert rho == pytest.approx(eta, abs=tol)

    def test_marginal_energy_preserved(self):
        rng = make_rng("evolve-marginal")
        acc = 0.0
        for _ in range(5000):
            h0 = sample_time_channel(self.pdp, self.corr, rng)
            hk = evolve_channel(h0, 0.6, self.corr, self.pdp, rng)
            acc += np.sum(np.abs(hk.h) ** 2)
        assert acc / 5000 == pytest.approx(4.0, rel=0.05)  # sum rho * N_r

    def test_eta_out_of_range(self):
        rng = make_rng("evolve-err")
        h0 = sample_time_channel(self.pdp, self.corr, rng)
        with pytest.raises(ValueError):
            evolve_channel(h0, 1.2, self.corr, self.pdp, rng)


class TestApplyChannel:
    def test_noiseless_flat_single_tap(self, rng):
        from blindmd.channel import TimeChannel

        f = build_dft_submatrix(64, [0])
        grid = build_tx_symbol(rng, 64, 4, default_pilots(64, 4))
        chan = TimeChannel(h=np.ones((1, 6), dtype=complex))
        y = apply_channel(grid, chan, f, np.inf, rng)
        assert y.noise_variance == 0.0
        for r in range(6):
            assert np.allclose(y.y[:, r], grid.symbols)

    def test_noise_power_calibration(self):
        from blindmd.channel import TimeChannel

        rng = make_rng("noisepow")
        f = build_dft_submatrix(1024, [0])
        spec = PilotSpec(positions=(0,), values=(1 + 0j,))
        grid = build_tx_symbol(rng, 1024, 4, spec)
        zero_grid = type(grid)(
            n=1024, symbols=np.zeros(1024, complex), pilots=spec, bits=grid.bits
        )
        chan = TimeChannel(h=np.zeros((1, 16), dtype=complex))
        acc = 0.0
        count = 0
        for _ in range(8):
            y = apply_channel(zero_grid, chan, f, 3.0, rng)
            acc += np.sum(np.abs(y.y) ** 2)
            count += y.y.size
        sigma2 = 10 ** (-0.3)
        assert acc / count == pytest.approx(sigma2, rel=0.01)

    def test_two_user_linearity(self, rng):
        from blindmd.channel import TimeChannel

        f = build_dft_submatrix(32, [0, 5])
        g1 = build_tx_symbol(rng, 32, 4, default_pilots(32, 4))
        g2 = build_tx_symbol(rng, 32, 4, default_pilots(32, 4))
        h1 = np.zeros((2, 3), complex)
        h1[0] = [1, 2, 3]
        h2 = np.zeros((2, 3), complex)
        h2[1] = [1j, -1, 0.5]
        c1, c2 = TimeChannel(h=h1), TimeChannel(h=h2)
        y12 = apply_channel([g1, g2], [c1, c2], f, np.inf, rng)
        ya = apply_channel(g1, c1, f, np.inf, rng)
        yb = apply_channel(g2, c2, f, np.inf, rng)
        assert np.allclose(y12.y, ya.y + yb.y)

    def test_dimension_mismatch(self, rng):
        from blindmd.channel import TimeChannel

        f = build_dft_submatrix(32, [0])
        grid = build_tx_symbol(rng, 32, 4, default_pilots(32, 4))
        chan = TimeChannel(h=np.ones((2, 4), dtype=complex))
        with pytest.raises(ValueError, match="does not match"):
            apply_channel(grid, chan, f, 10.0, rng)
