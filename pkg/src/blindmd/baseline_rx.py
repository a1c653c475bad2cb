"""Conventional pilot-based receivers used as benchmarks.

LS channel estimates at pilot subcarriers, linear or delay-truncating FFT
interpolation across frequency, MRC combining for one user, and per-subcarrier
MMSE equalization for multiple users.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Baseline channel-estimation pilots are unit-modulus symbols, the usual
# reference-signal convention; the rotational pilot of the blind path uses the
# constellation corner instead.
UNIT_PILOT = (1.0 + 1.0j) / np.sqrt(2.0)


@dataclass(frozen=True)
class PilotGrid:
    """Equi-spaced channel-estimation pilots, disjoint across users.

    ``positions[u]`` are user u's pilot subcarriers (near-uniform spacing on
    the integer grid), ``values[u]`` the known symbols transmitted there. No
    user transmits data on any other user's pilot subcarrier.
    """

    n: int
    positions: tuple[tuple[int, ...], ...]
    values: tuple[tuple[complex, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for u, pos in enumerate(self.positions):
            if len(pos) != len(self.values[u]):
                raise ValueError(f"user {u}: positions and values length mismatch")
            if any(p in seen for p in pos):
                raise ValueError(f"user {u}: pilot positions overlap another user's")
            seen.update(pos)

    @property
    def n_users(self) -> int:
        return len(self.positions)

    @property
    def total_pilots(self) -> int:
        return sum(len(p) for p in self.positions)

    @property
    def density(self) -> float:
        return self.total_pilots / self.n

    @property
    def all_positions(self) -> tuple[int, ...]:
        return tuple(sorted(p for pos in self.positions for p in pos))


def make_pilot_grid(n: int, n_users: int, per_user: int, value: complex = UNIT_PILOT) -> PilotGrid:
    """Near-equi-spaced pilot layout: the users' pilots interleave on a common
    grid of ``n_users * per_user`` positions, so each user's own pilots are
    also near-equi-spaced."""
    total = n_users * per_user
    if total > n:
        raise ValueError(f"{total} pilots exceed {n} subcarriers")
    grid = [int(round(i * n / total)) % n for i in range(total)]
    if len(set(grid)) != total:
        raise ValueError(f"pilot grid of {total} positions collides on n={n}")
    positions = tuple(tuple(grid[u::n_users]) for u in range(n_users))
    values = tuple((value,) * per_user for _ in range(n_users))
    return PilotGrid(n=n, positions=positions, values=values)


def ls_pilot_estimates(y, grid: PilotGrid, user: int) -> np.ndarray:
    """Per-antenna LS channel estimates ``y[p] / x[p]`` at one user's pilot
    subcarriers; shape (pilot count, N_r)."""
    ymat = np.asarray(getattr(y, "y", y))
    pos = list(grid.positions[user])
    vals = np.asarray(grid.values[user])
    if np.any(vals == 0):
        raise ValueError(f"user {user} has a zero pilot value")
    return ymat[pos, :] / vals[:, None]


def interpolate_linear(estimates: np.ndarray, positions, n: int) -> np.ndarray:
    """Complex linear interpolation between pilot estimates, flat beyond the
    first and last pilot."""
    pos = np.asarray(positions)
    if pos.size < 2:
        raise ValueError("linear interpolation needs at least 2 pilots")
    x = np.arange(n)
    j = np.clip(np.searchsorted(pos, x, side="right") - 1, 0, pos.size - 2)
    span = (pos[j + 1] - pos[j]).astype(float)
    w = np.clip((x - pos[j]) / span, 0.0, 1.0)[:, None]
    est = np.asarray(estimates)
    return est[j] * (1.0 - w) + est[j + 1] * w


def interpolate_fft(estimates: np.ndarray, positions, n: int, l_max: int) -> np.ndarray:
    """Delay-truncating interpolation of equi-spaced pilot estimates.

    The pilot-index sequence is inverse-DFT'd to a delay response, truncated
    to the first ``l_max`` taps (noise rejection: taps beyond the assumed
    channel length carry only estimation noise), then forward-DFT'd to all n
    subcarriers. Exact for channels whose delays are below both ``l_max`` and
    the aliasing limit set by the pilot spacing; delays beyond the aliasing
    limit fold over without warning.
    """
    pos = np.asarray(positions)
    count = pos.size
    if count < l_max:
        raise ValueError(f"need at least l_max={l_max} pilots, got {count}")
    spacing = n / count
    nominal = pos[0] + spacing * np.arange(count)
    # integer rounding of an ideal fractional grid perturbs each position by
    # less than one sample; anything larger is a genuinely irregular layout
    if np.max(np.abs(pos - nominal)) > 1.0 + 1e-9:
        raise ValueError("pilots are not equi-spaced (beyond integer rounding)")
    delay_response = np.fft.ifft(np.asarray(estimates), axis=0)
    taps = delay_response[:l_max]
    # undo the phase ramp a nonzero first-pilot offset puts on each tap
    if pos[0]:
        taps = taps * np.exp(2j * np.pi * pos[0] * np.arange(l_max) / n)[:, None]
    padded = np.zeros((n, taps.shape[1]), dtype=complex)
    padded[:l_max] = taps
    return np.fft.fft(padded, axis=0)


def mrc_combine(y, h_f: np.ndarray) -> np.ndarray:
    """Per-subcarrier maximal-ratio combining against a full frequency-domain
    channel; subcarriers with an all-zero channel row return 0."""
    ymat = np.asarray(getattr(y, "y", y))
    den = np.einsum("nr,nr->n", h_f.real, h_f.real) + np.einsum("nr,nr->n", h_f.imag, h_f.imag)
    num = np.einsum("nr,nr->n", ymat, h_f.conj())
    out = np.zeros(ymat.shape[0], dtype=complex)
    np.divide(num, den, out=out, where=den > 0)
    return out


def mmse_equalize_multi(y, h_f, sigma2: float) -> np.ndarray:
    """Per-subcarrier MMSE equalization of stacked user channels.

    With B_n the (N_u, N_r) channel matrix of subcarrier n, the estimate is
    ``x(n)^T = y_n^T B_n^H (B_n B_n^H + sigma2 I)^{-1}``, evaluated for all n
    as one batched Hermitian solve. Returns shape (N_u, N).
    """
    ymat = np.asarray(getattr(y, "y", y))
    b = np.asarray(h_f)
    if b.ndim == 2:
        b = b[None]
    bt = b.transpose(1, 0, 2)  # (N, N_u, N_r)
    n_u = bt.shape[1]
    m = bt.conj() @ bt.transpose(0, 2, 1)
    m[:, np.arange(n_u), np.arange(n_u)] += sigma2
    rhs = (bt.conj() @ ymat[:, :, None])[..., 0]
    return np.linalg.solve(m, rhs[..., None])[..., 0].T
