"""Monte Carlo experiment runners behind the CLI.

Every runner follows the same discipline: one random stream per
(master seed, experiment id, SNR index, trial index), all receivers of a trial
fed from the same channel and noise realization, and per-trial results reduced
in trial order so a rerun with the same seed is byte-identical, threaded or
not. Violations of each experiment's built-in sanity checks are collected in
``table.meta["violations"]``.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass

import numpy as np

try:  # the trial matrices are small; BLAS-level threads only add contention
    from threadpoolctl import threadpool_limits
except ImportError:  # optional, costs only speed
    threadpool_limits = None

from ..baseline_rx import (
    PilotGrid,
    interpolate_fft,
    interpolate_linear,
    ls_pilot_estimates,
    make_pilot_grid,
    mmse_equalize_multi,
    mrc_combine,
)
from ..blind_rx import (
    BlindConfig,
    IllConditionedMixingError,
    blind_decode_multi,
    blind_decode_single,
    estimate_coefficient_matrix,
    initial_point_circularity,
    initial_point_variance,
    multiuser_initial_points,
    warm_start_decode,
)
from ..channel import (
    PowerDelayProfile,
    SpatialCorrelation,
    TimeChannel,
    doppler_shift_hz,
    evolve_channel,
    exponential_corr,
    load_pdp,
    sample_time_channel,
    temporal_coefficient,
)
from ..numerics import DftSubmatrix, build_dft_submatrix, top_left_singular_vectors
from ..waveform import (
    FreqSymbolGrid,
    PilotSpec,
    build_tx_symbol,
    default_pilots,
    demodulate_ints,
    max_energy_point,
    qam_constellation,
)
from .config import ExperimentConfig
from .results import ResultTable

_POP8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def trial_rng(master_seed: int, experiment_id: str, snr_index: int, trial_index: int):
    """The seed protocol: streams keyed by (seed, experiment, SNR point, trial)
    so trials are reproducible under any execution order."""
    key = zlib.crc32(experiment_id.encode())
    return np.random.default_rng(
        np.random.SeedSequence((master_seed, key, snr_index, trial_index))
    )


def _bit_errors(a: np.ndarray, b: np.ndarray) -> int:
    return int(_POP8[np.bitwise_xor(a, b)].sum())


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _map_trials(worker, n_trials: int, threads: int) -> list:
    guard = threadpool_limits(limits=1) if threadpool_limits else nullcontext()
    with guard:
        if threads <= 1:
            return [worker(t) for t in range(n_trials)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, range(n_trials)))


@dataclass
class _Setting:
    """Per-experiment precomputed state shared by all trials."""

    cfg: ExperimentConfig
    f: DftSubmatrix
    corr: SpatialCorrelation
    pdps: list[PowerDelayProfile]
    rot_pilots: list[PilotSpec]
    rot_silent: list[tuple[int, ...]]
    user_gain: np.ndarray
    l_max: int
    grid: PilotGrid | None = None
    grid_silent: list[tuple[int, ...]] | None = None


def _rot_pilot_specs(cfg: ExperimentConfig) -> list[PilotSpec]:
    if cfg.n_u == 1:
        return [default_pilots(cfg.n, cfg.m, cfg.blind.eta)]
    value = max_energy_point(cfg.m)
    return [
        PilotSpec(positions=(int((u + 0.5) * cfg.n / cfg.n_u),), values=(value,))
        for u in range(cfg.n_u)
    ]


def _make_setting(cfg: ExperimentConfig, pilot_grid: PilotGrid | None = None) -> _Setting:
    delays = cfg.resolved_delays
    pdps = [load_pdp(p) for p in cfg.pdps]
    rot = _rot_pilot_specs(cfg)
    rot_silent = [
        tuple(sorted(p for v in range(cfg.n_u) if v != u for p in rot[v].positions))
        for u in range(cfg.n_u)
    ]
    gain = np.ones(cfg.n_u)
    if cfg.snr_offsets_db is not None:
        gain = 10.0 ** (np.asarray(cfg.snr_offsets_db) / 20.0)
    s = _Setting(
        cfg=cfg,
        f=build_dft_submatrix(cfg.n, delays),
        corr=exponential_corr(cfg.n_r, cfg.corr_r),
        pdps=pdps,
        rot_pilots=rot,
        rot_silent=rot_silent,
        user_gain=gain,
        l_max=max(delays) + 1,
    )
    if pilot_grid is not None:
        s.grid = pilot_grid
        allpos = set(pilot_grid.all_positions)
        s.grid_silent = [
            tuple(sorted(allpos - set(pilot_grid.positions[u]))) for u in range(cfg.n_u)
        ]
    return s


def _default_grid(cfg: ExperimentConfig, density: float | None = None) -> PilotGrid:
    density = cfg.baseline_pilot_density if density is None else density
    per_user = max(1, int(round(density * cfg.n / cfg.n_u)))
    return make_pilot_grid(cfg.n, cfg.n_u, per_user)


def _blind_cfg(s: _Setting, receiver: str, iterations: int | None = None) -> BlindConfig:
    cfg = s.cfg
    derot = {"blind": "in-loop", "blind-lambda": "lambda-only", "blind-cluster": "cluster"}[
        receiver
    ]
    given = cfg.blind.given_taps
    if cfg.blind.init == "given-tap" and given is None:
        given = tuple(p.dominant_delay for p in s.pdps)
    return BlindConfig(
        pilots=tuple(s.rot_pilots),
        iterations=cfg.blind.iterations if iterations is None else iterations,
        mu=cfg.blind.mu,
        derotate_at=cfg.blind.derotate_at,
        qam_order=cfg.m,
        delays=s.f.delays,
        init=cfg.blind.init,
        derotation=derot,
        given_taps=given,
    )


def _draw_channels(s: _Setting, rng) -> list[TimeChannel]:
    chans = []
    for u in range(s.cfg.n_u):
        h = sample_time_channel(s.pdps[u], s.corr, rng)
        if s.user_gain[u] != 1.0:
            h = TimeChannel(h=s.user_gain[u] * h.h, pdp=h.pdp)
        chans.append(_expand_taps(h, s.pdps[u], s.f))
    return chans


def _expand_taps(h: TimeChannel, pdp: PowerDelayProfile, f: DftSubmatrix) -> TimeChannel:
    """Place a profile's taps onto the experiment's shared delay grid."""
    if pdp.delays == f.delays:
        return h
    full = np.zeros((f.n_taps, h.n_r), dtype=complex)
    for row, d in enumerate(pdp.delays):
        full[f.delays.index(d)] = h.h[row]
    return TimeChannel(h=full, pdp=pdp)


def _tx_set(s: _Setting, rng, pilots, silent) -> list[FreqSymbolGrid]:
    return [
        build_tx_symbol(rng, s.cfg.n, s.cfg.m, pilots[u], silent=silent[u])
        for u in range(s.cfg.n_u)
    ]


def _received(s: _Setting, grids, chans, sigma2: float, w0: np.ndarray) -> np.ndarray:
    y = np.zeros((s.cfg.n, s.cfg.n_r), dtype=complex)
    for grid, chan in zip(grids, chans):
        y += grid.symbols[:, None] * (s.f.columns @ chan.h)
    if sigma2 > 0:
        y = y + np.sqrt(sigma2) * w0
    return y


def _true_ints(s: _Setting, grid: FreqSymbolGrid) -> np.ndarray:
    c = qam_constellation(s.cfg.m)
    return c.index_of(grid.symbols[grid.data_positions])


def _grid_pilot_specs(grid: PilotGrid) -> list[PilotSpec]:
    return [
        PilotSpec(positions=tuple(grid.positions[u]), values=tuple(grid.values[u]))
        for u in range(grid.n_users)
    ]


def _baseline_symbols(s: _Setting, y: np.ndarray, sigma2: float, mode: str) -> np.ndarray:
    """Pilot-based decode of the baseline transmission; returns (N_u, N)."""
    grid = s.grid
    h_f = np.empty((s.cfg.n_u, s.cfg.n, s.cfg.n_r), dtype=complex)
    for u in range(grid.n_users):
        est = ls_pilot_estimates(y, grid, u)
        if mode == "mrc-linear":
            h_f[u] = interpolate_linear(est, grid.positions[u], s.cfg.n)
        else:
            h_f[u] = interpolate_fft(est, grid.positions[u], s.cfg.n, s.l_max)
    if mode == "mmse":
        return mmse_equalize_multi(y, h_f, sigma2)
    return mrc_combine(y, h_f[0])[None, :]


# ---------------------------------------------------------------------------
# BER sweep


def run_ber_sweep(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Uncoded BER versus SNR for the selected receivers, paired within trials."""
    s = _make_setting(cfg, _default_grid(cfg))
    blind_rx = [r for r in cfg.receivers if r.startswith("blind")]
    base_rx = [r for r in cfg.receivers if not r.startswith("blind")]
    blind_cfgs = {r: _blind_cfg(s, r) for r in blind_rx}
    grid_specs = _grid_pilot_specs(s.grid)

    def one_trial(si: int, t: int) -> dict[str, float]:
        rng = trial_rng(cfg.seed, "ber-sweep", si, t)
        snr = cfg.snr_db[si]
        sigma2 = 0.0 if np.isinf(snr) else 10.0 ** (-snr / 10.0)
        chans = _draw_channels(s, rng)
        w0 = _complex_normal(rng, (cfg.n, cfg.n_r))
        tx_b = _tx_set(s, rng, s.rot_pilots, s.rot_silent)
        tx_c = _tx_set(s, rng, grid_specs, s.grid_silent)
        out: dict[str, float] = {}
        if blind_rx:
            yb = _received(s, tx_b, chans, sigma2, w0)
            truth = [_true_ints(s, g) for g in tx_b]
            for name, bc in blind_cfgs.items():
                if cfg.n_u == 1:
                    results = (blind_decode_single(yb, bc),)
                else:
                    results = blind_decode_multi(yb, bc)
                errs = bits = 0
                for u, res in enumerate(results):
                    got = demodulate_ints(res.symbols[res.data_positions], cfg.m)
                    errs += _bit_errors(got, truth[u])
                    bits += truth[u].size * qam_constellation(cfg.m).bits_per_symbol
                out[name] = errs / bits
        if base_rx:
            yc = _received(s, tx_c, chans, sigma2, w0)
            truth = [_true_ints(s, g) for g in tx_c]
            for name in base_rx:
                xhat = _baseline_symbols(s, yc, sigma2, name)
                errs = bits = 0
                for u in range(cfg.n_u):
                    dp = tx_c[u].data_positions
                    got = demodulate_ints(xhat[u][dp], cfg.m)
                    errs += _bit_errors(got, truth[u])
                    bits += truth[u].size * qam_constellation(cfg.m).bits_per_symbol
                out[name] = errs / bits
        return out

    table = ResultTable(meta={"config": cfg.to_dict(), "seed": cfg.seed})
    per_point: dict[tuple[str, float], tuple[float, float]] = {}
    for si, snr in enumerate(cfg.snr_db):
        rows = _map_trials(lambda t: one_trial(si, t), cfg.trials, threads)
        for name in cfg.receivers:
            vals = np.array([r[name] for r in rows])
            mean = float(vals.mean())
            se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
            per_point[(name, snr)] = (mean, se)
            table.add(
                experiment=cfg.kind, receiver=name, snr_db=snr, metric="ber",
                value=mean, stderr=se, trials=cfg.trials, seed=cfg.seed,
            )
    violations = []
    for b in blind_rx:
        for c in base_rx:
            for snr in cfg.snr_db:
                vb, sb = per_point[(b, snr)]
                vc, sc = per_point[(c, snr)]
                if vb > vc + 3.0 * np.hypot(sb, sc):
                    violations.append(
                        f"{b} BER {vb:.3g} exceeds {c} {vc:.3g} + 3 SE at {snr} dB"
                    )
    table.meta["violations"] = violations
    return table


# ---------------------------------------------------------------------------
# dominant-tap estimation error


def run_tap_error(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Fraction of trials with a wrong dominant-tap pick, per estimator."""
    s = _make_setting(cfg)
    true_taps = [p.dominant_delay for p in s.pdps]

    def one_trial(si: int, t: int) -> dict[str, int]:
        rng = trial_rng(cfg.seed, "tap-error", si, t)
        snr = cfg.snr_db[si]
        sigma2 = 0.0 if np.isinf(snr) else 10.0 ** (-snr / 10.0)
        chans = _draw_channels(s, rng)
        w0 = _complex_normal(rng, (cfg.n, cfg.n_r))
        tx = _tx_set(s, rng, s.rot_pilots, s.rot_silent)
        y = _received(s, tx, chans, sigma2, w0)
        out: dict[str, int] = {}
        if cfg.n_u == 1:
            u1 = top_left_singular_vectors(y, 1).vector(0)
            if "variance" in cfg.receivers:
                out["variance"] = int(initial_point_variance(u1, s.f)[1] != true_taps[0])
            if "circularity" in cfg.receivers:
                out["circularity"] = int(initial_point_circularity(u1, s.f)[1] != true_taps[0])
        else:
            svd = top_left_singular_vectors(y, cfg.n_u)
            try:
                mixing = estimate_coefficient_matrix(svd, s.rot_pilots)
                points = multiuser_initial_points(svd, mixing, s.f)
                taps = [tap for _, tap in points]
            except IllConditionedMixingError:
                taps = [-1] * cfg.n_u  # unmixing failed, count as misses
            for u, tap in enumerate(taps):
                out[f"circularity-user{u}"] = int(tap != true_taps[u])
        return out

    table = ResultTable(meta={"config": cfg.to_dict(), "seed": cfg.seed})
    names: list[str] = []
    series: dict[tuple[str, float], tuple[float, float]] = {}
    for si, snr in enumerate(cfg.snr_db):
        rows = _map_trials(lambda t: one_trial(si, t), cfg.trials, threads)
        if not names:
            names = sorted(rows[0])
        for name in names:
            p = float(np.mean([r[name] for r in rows]))
            se = float(np.sqrt(max(p * (1 - p), 1e-12) / cfg.trials))
            series[(name, snr)] = (p, se)
            table.add(
                experiment=cfg.kind, receiver=name, snr_db=snr, metric="tap_error",
                value=p, stderr=se, trials=cfg.trials, seed=cfg.seed,
            )
    violations = []
    for name in names:
        for lo, hi in zip(cfg.snr_db, cfg.snr_db[1:]):
            v0, s0 = series[(name, lo)]
            v1, s1 = series[(name, hi)]
            if v1 > v0 + 3.0 * np.hypot(s0, s1):
                violations.append(f"{name} tap error rises {v0:.3g} -> {v1:.3g} at {hi} dB")
    if "variance" in names and "circularity" in names:
        for snr in cfg.snr_db:
            vv, sv = series[("variance", snr)]
            vc, sc = series[("circularity", snr)]
            if vc > vv + 3.0 * np.hypot(sv, sc):
                violations.append(
                    f"circularity error {vc:.3g} above variance {vv:.3g} + 3 SE at {snr} dB"
                )
    table.meta["violations"] = violations
    return table


# ---------------------------------------------------------------------------
# ---------------------------------------------------------------------------
# temporal warm starts


def run_temporal(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Iterations needed to match the pilot-based baseline across OFDM symbols
    spaced in time, warm-starting from the first symbol's channel estimate.

    The first symbol (t = 0) runs the configured cold-start iteration count.
    For each later symbol one warm decode records every stopping point, and
    the smallest iteration count whose BER is at or below the baseline's at
    every SNR point is reported.
    """
    if cfg.n_u != 1:
        raise ValueError("the temporal experiment is single-user")
    if not cfg.symbol_times_ms or cfg.symbol_times_ms[0] != 0.0 or len(cfg.symbol_times_ms) < 2:
        raise ValueError("symbol_times_ms must start at 0 and include a later symbol")
    s = _make_setting(cfg, _default_grid(cfg))
    if s.pdps[0].delays != s.f.delays:
        raise ValueError("temporal runs need the delay grid to equal the profile's delays")
    grid_spec = _grid_pilot_specs(s.grid)[0]
    warm_times = list(cfg.symbol_times_ms[1:])
    n_warm = len(warm_times)
    cold_cfg = _blind_cfg(s, "blind")
    t_total = cold_cfg.iterations
    bps = qam_constellation(cfg.m).bits_per_symbol

    def one_trial(speed: float, si: int, t: int):
        rng = trial_rng(cfg.seed, f"temporal-{speed:g}", si, t)
        snr = cfg.snr_db[si]
        sigma2 = 0.0 if np.isinf(snr) else 10.0 ** (-snr / 10.0)
        f_d = doppler_shift_hz(speed, cfg.carrier_hz)
        h0 = sample_time_channel(s.pdps[0], s.corr, rng)
        chans = [h0] + [
            evolve_channel(
                h0, temporal_coefficient(f_d, 1, tau * 1e-3), s.corr, s.pdps[0], rng
            )
            for tau in warm_times
        ]
        cold_err = 0
        warm_err = np.zeros((n_warm, t_total), dtype=np.int64)
        base_err = np.zeros(1 + n_warm, dtype=np.int64)
        bits_blind = bits_base = 0
        h_ref = None
        for j, chan in enumerate(chans):
            w0 = _complex_normal(rng, (cfg.n, cfg.n_r))
            tx_b = build_tx_symbol(rng, cfg.n, cfg.m, s.rot_pilots[0])
            tx_c = build_tx_symbol(rng, cfg.n, cfg.m, grid_spec, silent=s.grid_silent[0])
            yb = _received(s, [tx_b], [chan], sigma2, w0)
            yc = _received(s, [tx_c], [chan], sigma2, w0)
            truth_b = _true_ints(s, tx_b)
            truth_c = _true_ints(s, tx_c)
            bits_blind = truth_b.size * bps
            bits_base = truth_c.size * bps
            if j == 0:
                res = blind_decode_single(yb, cold_cfg)
                got = demodulate_ints(res.symbols[res.data_positions], cfg.m)
                cold_err = _bit_errors(got, truth_b)
                h_ref = res.h_hat
            else:
                res = warm_start_decode(yb, h_ref, cold_cfg, record_iterations=True)
                for k, ints in enumerate(res.iteration_hard_ints):
                    warm_err[j - 1, k] = _bit_errors(ints, truth_b)
            xb = _baseline_symbols(s, yc, sigma2, "mrc-fft")
            got = demodulate_ints(xb[0][tx_c.data_positions], cfg.m)
            base_err[j] = _bit_errors(got, truth_c)
        return cold_err, warm_err, base_err, bits_blind, bits_base

    table = ResultTable(meta={"config": cfg.to_dict(), "seed": cfg.seed})
    violations: list[str] = []
    n_snr = len(cfg.snr_db)
    for speed in cfg.speeds_kmh:
        f_d = doppler_shift_hz(speed, cfg.carrier_hz)
        cold_trial_ber = np.zeros((n_snr, cfg.trials))
        warm_ber = np.zeros((n_warm, t_total, n_snr))
        warm_trial_err = np.zeros((n_snr, cfg.trials, n_warm, t_total), dtype=np.int64)
        base_trial_ber = np.zeros((1 + n_warm, n_snr, cfg.trials))
        bits_blind = bits_base = 1
        for si in range(n_snr):
            rows = _map_trials(lambda t: one_trial(speed, si, t), cfg.trials, threads)
            bits_blind, bits_base = rows[0][3], rows[0][4]
            for t, (ce, we, be, _, _) in enumerate(rows):
                cold_trial_ber[si, t] = ce / bits_blind
                warm_trial_err[si, t] = we
                base_trial_ber[:, si, t] = be / bits_base
            warm_ber[:, :, si] = warm_trial_err[si].sum(axis=0) / (bits_blind * cfg.trials)
        base_ber = base_trial_ber.mean(axis=2)
        label = f"@{speed:g}kmh"

        def add_ber(receiver: str, si: int, trial_vals: np.ndarray):
            table.add(
                experiment=cfg.kind, receiver=receiver, snr_db=cfg.snr_db[si], metric="ber",
                value=float(trial_vals.mean()),
                stderr=float(trial_vals.std(ddof=1) / np.sqrt(trial_vals.size)),
                trials=cfg.trials, seed=cfg.seed,
            )

        for j, tau in enumerate(cfg.symbol_times_ms):
            for si in range(n_snr):
                add_ber(f"mrc-fft{label}-t{tau:g}ms", si, base_trial_ber[j, si])
        for si in range(n_snr):
            add_ber(f"blind{label}-t0ms", si, cold_trial_ber[si])
        table.add(
            experiment=cfg.kind, receiver=f"blind{label}-t0ms", snr_db=np.nan,
            metric="iterations", value=float(t_total), stderr=0.0,
            trials=cfg.trials, seed=cfg.seed,
        )
        counts = [t_total]
        for j, tau in enumerate(warm_times):
            ok = np.all(warm_ber[j] <= base_ber[j + 1][None, :], axis=1)
            matched = bool(ok.any())
            count = int(np.argmax(ok)) + 1 if matched else t_total
            if not matched:
                violations.append(f"warm start at {tau:g} ms ({speed:g} km/h) never matched")
            elif count >= t_total:
                violations.append(
                    f"warm start at {tau:g} ms ({speed:g} km/h) not below cold count"
                )
            counts.append(count)
            for si in range(n_snr):
                add_ber(
                    f"blind{label}-t{tau:g}ms", si,
                    warm_trial_err[si, :, j, count - 1] / bits_blind,
                )
            table.add(
                experiment=cfg.kind, receiver=f"blind{label}-t{tau:g}ms", snr_db=np.nan,
                metric="iterations", value=float(count), stderr=0.0,
                trials=cfg.trials, seed=cfg.seed,
            )
            table.add(
                experiment=cfg.kind, receiver=f"blind{label}-t{tau:g}ms", snr_db=np.nan,
                metric="eta", value=temporal_coefficient(f_d, 1, tau * 1e-3), stderr=0.0,
                trials=cfg.trials, seed=cfg.seed,
            )
        for a, b in zip(counts[1:], counts[2:]):
            if b < a:
                violations.append(
                    f"warm iteration counts not monotone in time at {speed:g} km/h"
                )
    table.meta["violations"] = violations
    return table


# ---------------------------------------------------------------------------
# spectral utilization


def run_utilization(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Data-subcarrier fractions: the blind receiver's exact overhead versus
    the smallest baseline pilot density whose BER matches the blind BER on a
    paired Monte Carlo at every configured SNR point."""
    s = _make_setting(cfg)
    blind_cfgs = {"blind": _blind_cfg(s, "blind")}
    c = qam_constellation(cfg.m)

    def blind_trial(si: int, t: int) -> float:
        rng = trial_rng(cfg.seed, "utilization", si, t)
        snr = cfg.snr_db[si]
        sigma2 = 0.0 if np.isinf(snr) else 10.0 ** (-snr / 10.0)
        chans = _draw_channels(s, rng)
        w0 = _complex_normal(rng, (cfg.n, cfg.n_r))
        tx_b = _tx_set(s, rng, s.rot_pilots, s.rot_silent)
        yb = _received(s, tx_b, chans, sigma2, w0)
        if cfg.n_u == 1:
            results = (blind_decode_single(yb, blind_cfgs["blind"]),)
        else:
            results = blind_decode_multi(yb, blind_cfgs["blind"])
        errs = bits = 0
        for u, res in enumerate(results):
            truth = _true_ints(s, tx_b[u])
            got = demodulate_ints(res.symbols[res.data_positions], cfg.m)
            errs += _bit_errors(got, truth)
            bits += truth.size * c.bits_per_symbol
        return errs / bits

    def baseline_trial(setting: _Setting, grid_specs, si: int, t: int) -> float:
        rng = trial_rng(cfg.seed, "utilization", si, t)
        snr = cfg.snr_db[si]
        sigma2 = 0.0 if np.isinf(snr) else 10.0 ** (-snr / 10.0)
        chans = _draw_channels(setting, rng)
        w0 = _complex_normal(rng, (cfg.n, cfg.n_r))
        _tx_set(setting, rng, setting.rot_pilots, setting.rot_silent)  # keep stream aligned
        tx_c = _tx_set(setting, rng, grid_specs, setting.grid_silent)
        yc = _received(setting, tx_c, chans, sigma2, w0)
        mode = "mmse" if cfg.n_u > 1 else "mrc-fft"
        xhat = _baseline_symbols(setting, yc, sigma2, mode)
        errs = bits = 0
        for u in range(cfg.n_u):
            truth = _true_ints(setting, tx_c[u])
            got = demodulate_ints(xhat[u][tx_c[u].data_positions], cfg.m)
            errs += _bit_errors(got, truth)
            bits += truth.size * c.bits_per_symbol
        return errs / bits

    table = ResultTable(meta={"config": cfg.to_dict(), "seed": cfg.seed})
    rot_count = sum(p.count for p in s.rot_pilots)
    table.add(
        experiment=cfg.kind, receiver="blind", snr_db=np.nan, metric="utilization",
        value=(cfg.n - rot_count) / cfg.n, stderr=0.0, trials=cfg.trials, seed=cfg.seed,
    )
    blind_ber = np.zeros(len(cfg.snr_db))
    for si, snr in enumerate(cfg.snr_db):
        vals = np.array(_map_trials(lambda t: blind_trial(si, t), cfg.trials, threads))
        blind_ber[si] = vals.mean()
        table.add(
            experiment=cfg.kind, receiver="blind", snr_db=snr, metric="ber",
            value=float(vals.mean()),
            stderr=float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0,
            trials=cfg.trials, seed=cfg.seed,
        )

    if cfg.n_u == 1:
        candidates = list(range(48, 169, 4))
    else:
        candidates = [cfg.n_u * k for k in range(12, 85, 2)]
    matched = None
    matched_ber = None
    for total in candidates:
        grid = make_pilot_grid(cfg.n, cfg.n_u, total // cfg.n_u)
        setting = _make_setting(cfg, grid)
        specs = _grid_pilot_specs(grid)
        ber = np.zeros(len(cfg.snr_db))
        for si in range(len(cfg.snr_db)):
            vals = np.array(
                _map_trials(lambda t: baseline_trial(setting, specs, si, t), cfg.trials, threads)
            )
            ber[si] = vals.mean()
        if np.all(ber <= blind_ber):
            matched = total
            matched_ber = ber
            break
    violations = []
    if matched is None:
        violations.append(
            f"baseline never matched blind BER up to density {candidates[-1] / cfg.n:.3f}"
        )
        table.add(
            experiment=cfg.kind, receiver="baseline", snr_db=np.nan, metric="matched_density",
            value=np.nan, stderr=np.nan, trials=cfg.trials, seed=cfg.seed,
        )
    else:
        table.add(
            experiment=cfg.kind, receiver="baseline", snr_db=np.nan, metric="matched_density",
            value=matched / cfg.n, stderr=0.0, trials=cfg.trials, seed=cfg.seed,
        )
        table.add(
            experiment=cfg.kind, receiver="baseline", snr_db=np.nan, metric="utilization",
            value=1.0 - matched / cfg.n, stderr=0.0, trials=cfg.trials, seed=cfg.seed,
        )
        for si, snr in enumerate(cfg.snr_db):
            table.add(
                experiment=cfg.kind, receiver="baseline", snr_db=snr, metric="ber",
                value=float(matched_ber[si]), stderr=np.nan, trials=cfg.trials, seed=cfg.seed,
            )
    table.meta["violations"] = violations
    return table


RUNNERS = {
    "ber-sweep": run_ber_sweep,
    "tap-error": run_tap_error,
    "temporal": run_temporal,
    "utilization": run_utilization,
}
