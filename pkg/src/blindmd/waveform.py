"""Square M-QAM constellations and frequency-domain OFDM symbol construction.

Wire format (fixed so bit streams are reproducible across runs):

* Square M-QAM, M in {4, 16, 64, 256}, scaled to unit average symbol energy
  (scale factor ``sqrt(3 / (2 (M - 1)))``).
* A symbol carries ``log2(M)`` bits: the first half selects the real axis,
  the second half the imaginary axis, each Gray-coded per axis.
* Per axis, bit pattern ``0..0`` maps to the most positive amplitude
  ``side - 1`` and the Gray sequence walks down to ``-(side - 1)``.
  QPSK bits ``00`` therefore map to ``(1 + 1j) / sqrt(2)``.
* Hard decisions are nearest-point with ties broken toward the point with
  the smaller real part, then the smaller imaginary part.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64, 256)


def _gray_decode(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    s = b >> 1
    while s.any():
        b ^= s
        s >>= 1
    return b


@dataclass(frozen=True)
class QamConstellation:
    """Gray-coded square QAM alphabet with unit average energy."""

    order: int
    points: np.ndarray = field(repr=False)  # indexed by symbol integer
    side: int
    bits_per_symbol: int
    scale: float

    @property
    def axis_bits(self) -> int:
        return self.bits_per_symbol // 2

    def index_of(self, points: np.ndarray) -> np.ndarray:
        """Symbol integers of exact constellation points."""
        ii = np.rint((self.side - 1 - np.real(points) / self.scale) / 2).astype(np.int64)
        iq = np.rint((self.side - 1 - np.imag(points) / self.scale) / 2).astype(np.int64)
        gi = ii ^ (ii >> 1)
        gq = iq ^ (iq >> 1)
        return (gi << self.axis_bits) | gq

    def bits_of(self, symbol_ints: np.ndarray) -> np.ndarray:
        """Unpack symbol integers to a flat 0/1 bit array (MSB first)."""
        k = np.asarray(symbol_ints, dtype=np.int64)
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return ((k[..., None] >> shifts) & 1).astype(np.uint8).reshape(-1)


@lru_cache(maxsize=None)
def qam_constellation(m: int) -> QamConstellation:
    if m not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {m}; expected one of {SUPPORTED_ORDERS}")
    side = int(round(np.sqrt(m)))
    bps = int(round(np.log2(m)))
    scale = float(1.0 / np.sqrt(2.0 * (m - 1) / 3.0))
    # symbol integer = gray(I index) << bps/2 | gray(Q index)
    sym = np.arange(m)
    gi = sym >> (bps // 2)
    gq = sym & (side - 1)
    amps = (side - 1 - 2 * np.arange(side)) * scale
    points = amps[_gray_decode(gi)] + 1j * amps[_gray_decode(gq)]
    points.flags.writeable = False
    return QamConstellation(order=m, points=points, side=side, bits_per_symbol=bps, scale=scale)


def _nearest_axis_index(coord: np.ndarray, side: int) -> np.ndarray:
    # amplitude levels decrease with index; rounding half up picks the larger
    # index, i.e. the smaller amplitude, which is the required tie break
    return np.clip(np.floor((side - 1 - coord) / 2 + 0.5), 0, side - 1).astype(np.int64)


def qam_modulate(bits: np.ndarray, m: int) -> np.ndarray:
    """Map a 0/1 bit sequence to unit-energy Gray-coded M-QAM symbols."""
    c = qam_constellation(m)
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    if bits.size % c.bits_per_symbol:
        raise ValueError(
            f"bit count {bits.size} not divisible by log2({m}) = {c.bits_per_symbol}"
        )
    groups = bits.reshape(-1, c.bits_per_symbol)
    weights = 1 << np.arange(c.bits_per_symbol - 1, -1, -1)
    return c.points[groups @ weights]


def qam_demodulate(symbols: np.ndarray, m: int) -> np.ndarray:
    """Hard-decide noisy symbols to bits (nearest point, fixed tie break)."""
    return qam_constellation(m).bits_of(demodulate_ints(symbols, m))


def demodulate_ints(symbols: np.ndarray, m: int) -> np.ndarray:
    """Hard-decide to symbol integers; cheaper than bit unpacking for BER counts."""
    c = qam_constellation(m)
    z = np.asarray(symbols)
    ii = _nearest_axis_index(np.real(z) / c.scale, c.side)
    iq = _nearest_axis_index(np.imag(z) / c.scale, c.side)
    gi = ii ^ (ii >> 1)
    gq = iq ^ (iq >> 1)
    return (gi << c.axis_bits) | gq


def nearest_constellation_point(z: np.ndarray, m: int) -> np.ndarray:
    """Nearest constellation point(s) under the same tie break as demodulation."""
    c = qam_constellation(m)
    z = np.asarray(z)
    amps = (c.side - 1 - 2 * np.arange(c.side)) * c.scale
    ii = _nearest_axis_index(np.real(z) / c.scale, c.side)
    iq = _nearest_axis_index(np.imag(z) / c.scale, c.side)
    return amps[ii] + 1j * amps[iq]


def max_energy_point(m: int) -> complex:
    """The (+, +) corner of the constellation, the default rotational pilot."""
    c = qam_constellation(m)
    return complex((c.side - 1) * c.scale, (c.side - 1) * c.scale)


@dataclass(frozen=True)
class PilotSpec:
    """Rotational pilots: a few known symbols used only to resolve the complex
    scale ambiguity of the blind factorization, not to estimate the channel."""

    positions: tuple[int, ...]
    values: tuple[complex, ...]

    def __post_init__(self):
        if len(self.positions) != len(self.values):
            raise ValueError("pilot positions and values must have equal length")
        if len(self.positions) == 0:
            raise ValueError("at least one pilot is required")
        if list(self.positions) != sorted(set(self.positions)):
            raise ValueError(f"pilot positions must be distinct and sorted: {self.positions}")

    @property
    def count(self) -> int:
        return len(self.positions)


def default_pilots(n: int, m: int, count: int = 1) -> PilotSpec:
    """Evenly strided rotational pilots carrying the max-energy corner point.

    ``count=1`` places the single pilot at the center subcarrier ``n // 2``.
    """
    if not 1 <= count <= n:
        raise ValueError(f"pilot count {count} out of range for n={n}")
    positions = tuple(int((i + 0.5) * n / count) for i in range(count))
    value = max_energy_point(m)
    return PilotSpec(positions=positions, values=(value,) * count)


@dataclass(frozen=True)
class FreqSymbolGrid:
    """One user's frequency-domain OFDM symbol (the diagonal of its symbol matrix).

    ``silent`` positions transmit zero; they are subcarriers reserved for other
    users' pilots in multi-user operation. ``bits`` is the payload carried on
    data subcarriers in ascending subcarrier order.
    """

    n: int
    symbols: np.ndarray
    pilots: PilotSpec
    bits: np.ndarray
    silent: tuple[int, ...] = ()

    @property
    def data_positions(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.pilots.positions)] = False
        if self.silent:
            mask[list(self.silent)] = False
        return np.flatnonzero(mask)


def build_tx_symbol(
    rng: np.random.Generator,
    n: int,
    m: int,
    pilots: PilotSpec,
    silent: tuple[int, ...] = (),
) -> FreqSymbolGrid:
    """Fill an OFDM symbol with uniform random constellation points plus pilots.

    Pilot subcarriers carry the pilot values, ``silent`` subcarriers carry zero,
    and the drawn payload bits are recorded for BER scoring.
    """
    c = qam_constellation(m)
    for p in pilots.positions:
        if not 0 <= p < n:
            raise ValueError(f"pilot position {p} outside [0, {n})")
    overlap = set(pilots.positions) & set(silent)
    if overlap:
        raise ValueError(f"pilot positions collide with silent positions: {sorted(overlap)}")
    mask = np.ones(n, dtype=bool)
    mask[list(pilots.positions)] = False
    if silent:
        mask[list(silent)] = False
    n_data = int(mask.sum())
    ints = rng.integers(0, m, size=n_data)
    symbols = np.zeros(n, dtype=complex)
    symbols[mask] = c.points[ints]
    symbols[list(pilots.positions)] = np.asarray(pilots.values)
    return FreqSymbolGrid(
        n=n, symbols=symbols, pilots=pilots, bits=c.bits_of(ints), silent=tuple(silent)
    )
