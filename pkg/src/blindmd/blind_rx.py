"""Blind demodulation of the received matrix by iterative matrix decomposition.

The receiver factors the frequency-domain received matrix ``Y`` into a diagonal
symbol matrix and a low-rank channel, alternating two closed-form solves:

* channel update: Tikhonov-regularized LS (``numerics.regularized_ls_channel``),
* symbol update: per-subcarrier maximal-ratio combining against the current
  frequency channel (single user), or a per-subcarrier regularized LS over the
  stacked user channels (multi user).

The factorization is unique only up to a complex scale ``lambda`` per user
(``x_hat = lambda x_true``, ``h_hat = x_true / lambda``). A single rotational
pilot per user resolves it: after ``derotate_at`` iterations the estimate is
rescaled by the pilot ratio, and subsequent iterations replace the symbol
estimate with its nearest constellation points (pilots pinned) so that the
feedback progressively removes the residual rotation.

Initial points come from the dominant left singular vectors of ``Y``: the
vector is multiplied elementwise with the conjugate DFT column of a candidate
tap delay, and the candidate whose point cloud looks most like a QAM
constellation wins, scored either by the variance of its angle histogram or by
the circularity of its convex hull.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .channel import TimeChannel
from .numerics import (
    DftSubmatrix,
    SingularSystemError,
    SvdBasis,
    build_dft_submatrix,
    regularized_ls_channel,
    top_left_singular_vectors,
)
from .waveform import (
    PilotSpec,
    demodulate_ints,
    nearest_constellation_point,
    qam_constellation,
)

INIT_MODES = ("variance", "circularity", "given-tap", "warm-start")
DEROTATION_MODES = ("in-loop", "lambda-only", "cluster")


class IllConditionedMixingError(RuntimeError):
    """The estimated mixing matrix of the multi-user singular vectors is too
    ill-conditioned to invert reliably."""


@dataclass(frozen=True)
class BlindConfig:
    """Knobs of the blind decode pipeline.

    ``pilots`` holds one rotational-pilot spec per user; its length sets the
    user count. ``given_taps`` supplies known dominant tap delays for the
    ``given-tap`` init and the ill-conditioned-mixing fallback.
    """

    pilots: tuple[PilotSpec, ...]
    iterations: int = 10
    mu: float = 0.1
    derotate_at: int = 4
    qam_order: int = 64
    delays: tuple[int, ...] = (0, 1, 2, 3)
    init: str = "variance"
    derotation: str = "in-loop"
    given_taps: tuple[int, ...] | None = None

    def __post_init__(self):
        if isinstance(self.pilots, PilotSpec):
            object.__setattr__(self, "pilots", (self.pilots,))
        if not self.pilots:
            raise ValueError("at least one user pilot spec is required")
        if not 0 < self.mu < 1:
            raise ValueError(f"mu must be in (0, 1), got {self.mu}")
        if not 1 <= self.derotate_at < self.iterations:
            raise ValueError(
                f"need 1 <= derotate_at < iterations, got {self.derotate_at}, {self.iterations}"
            )
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init!r}")
        if self.derotation not in DEROTATION_MODES:
            raise ValueError(f"unknown derotation mode {self.derotation!r}")
        if self.init == "given-tap":
            if self.given_taps is None or len(self.given_taps) != len(self.pilots):
                raise ValueError("given-tap init needs one tap delay per user")
            for t in self.given_taps:
                if t not in self.delays:
                    raise ValueError(f"given tap {t} not on the delay grid {self.delays}")

    @property
    def n_users(self) -> int:
        return len(self.pilots)


@dataclass(frozen=True)
class CoefficientMatrix:
    """Mixing coefficients mapping per-user symbol directions to the dominant
    left singular vectors; row j, column u is vector j's coefficient on user u."""

    a: np.ndarray = field(repr=False)

    @property
    def n_users(self) -> int:
        return self.a.shape[0]

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.a))


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of a blind decode for one user.

    ``residuals[k]`` is the Frobenius residual of the factorization recorded
    right after the symbol update of iteration k+1, before any de-rotation or
    constellation mapping of that iteration (shared across users in a
    multi-user decode). ``iteration_hard_ints`` optionally snapshots the hard
    symbol decisions on data subcarriers after every iteration.
    """

    symbols: np.ndarray
    hard_bits: np.ndarray
    lambda_hat: complex
    h_hat: TimeChannel
    dominant_tap: int | None
    iterations_used: int
    residuals: tuple[float, ...]
    flagged_subcarriers: tuple[int, ...] = ()
    data_positions: np.ndarray | None = None
    iteration_hard_ints: tuple[np.ndarray, ...] | None = None


# ---------------------------------------------------------------------------
# initial-point estimation


def _candidate_points(u1: np.ndarray, f: DftSubmatrix, i: int) -> np.ndarray:
    return u1 * np.conj(f.columns[:, i])


def _pick(scores: np.ndarray, f: DftSubmatrix, best: str) -> int:
    target = scores.max() if best == "max" else scores.min()
    tied = [f.delays[i] for i in np.flatnonzero(scores == target)]
    return f.delays.index(min(tied))


def initial_point_variance(
    u1: np.ndarray, f: DftSubmatrix, bins: int = 64
) -> tuple[np.ndarray, int]:
    """Dominant-tap selection by angle-histogram variance.

    For each candidate tap the singular vector is unrotated by that tap's DFT
    column; the candidate whose complex angles pile up in a few directions
    (highest variance of the histogram counts) is the dominant tap. Before
    binning, angles are rotated so the circular mean of 4x the angle is zero:
    a quarter-turn of the constellation then shifts the histogram by a whole
    number of bins, which makes the score invariant to the arbitrary global
    phase of the singular vector. Returns ``(initial_diagonal, tap_delay)``.
    """
    if np.linalg.norm(u1) == 0:
        raise ValueError("singular vector must be nonzero")
    scores = np.empty(f.n_taps)
    for i in range(f.n_taps):
        ang = np.angle(_candidate_points(u1, f, i))
        mean4 = np.angle(np.exp(4j * ang).sum())
        ang = np.mod(ang - mean4 / 4.0 + np.pi, 2.0 * np.pi) - np.pi
        counts, _ = np.histogram(ang, bins=bins, range=(-np.pi, np.pi))
        scores[i] = np.var(counts)
    delay = _pick(scores, f, "max")
    return _candidate_points(u1, f, f.delays.index(delay)), delay


def circularity_score(points: np.ndarray) -> float:
    """``4 pi area / perimeter^2`` of the convex hull: 1 for a circle,
    ``pi / 4`` for a square outline, 0 for a degenerate (collinear) hull."""
    xy = np.column_stack([points.real, points.imag])
    try:
        hull = ConvexHull(xy)
    except QhullError:
        return 0.0
    if hull.area == 0.0:
        return 0.0
    return float(4.0 * np.pi * hull.volume / hull.area**2)


def initial_point_circularity(z: np.ndarray, f: DftSubmatrix) -> tuple[np.ndarray, int]:
    """Dominant-tap selection by hull circularity.

    Wrong candidates scatter on concentric circles (circular hull); the right
    one resembles the square QAM outline, so the least circular hull wins.
    Returns ``(initial_diagonal, tap_delay)``.
    """
    if np.linalg.norm(z) == 0:
        raise ValueError("input vector must be nonzero")
    scores = np.array(
        [circularity_score(_candidate_points(z, f, i)) for i in range(f.n_taps)]
    )
    delay = _pick(scores, f, "min")
    return _candidate_points(z, f, f.delays.index(delay)), delay


# ---------------------------------------------------------------------------
# alternating-minimization steps


def _mrc_parts(ymat: np.ndarray, b: np.ndarray, bc: np.ndarray | None = None):
    bc = b.conj() if bc is None else np.conjugate(b, out=bc)
    den = np.einsum("nr,nr->n", b, bc).real
    num = np.einsum("nr,nr->n", ymat, bc)
    zero = den == 0.0
    x = np.zeros(ymat.shape[0], dtype=complex)
    np.divide(num, den, out=x, where=~zero)
    return x, zero, den


def _mrc_update(ymat: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-subcarrier matched-filter combine of Y against the frequency
    channel B; zero-channel subcarriers yield 0 and are reported."""
    x, zero, _ = _mrc_parts(ymat, b)
    return x, zero


def am_step_single(
    y, x_hat: np.ndarray, f: DftSubmatrix, mu: float
) -> tuple[TimeChannel, np.ndarray]:
    """One alternating-minimization iteration: regularized LS channel update
    followed by the MRC symbol update. Returns ``(h_hat, x_next)``."""
    ymat = np.asarray(getattr(y, "y", y))
    h = regularized_ls_channel(x_hat, f, ymat, mu)
    x_next, _ = _mrc_update(ymat, f.columns @ h)
    return TimeChannel(h=h), x_next


class _MultiWorkspace:
    """Reused iteration buffers; fresh multi-megabyte allocations per step
    otherwise dominate the runtime of a full decode."""

    def __init__(self, n: int, n_u: int, l: int, n_r: int):
        self.a = np.empty((n, n_u * l), dtype=complex)
        self.b = np.empty((n, n_u, n_r), dtype=complex)
        self.bc = np.empty((n, n_u, n_r), dtype=complex)
        self.m = np.empty((n, n_u, n_u), dtype=complex)
        self.rhs = np.empty((n, n_u, 1), dtype=complex)
        self.y_power: float | None = None


def _am_multi_core(
    ymat: np.ndarray,
    x_hats: np.ndarray,
    f: DftSubmatrix,
    mu: float,
    ws: _MultiWorkspace | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Shared multi-user iteration: returns the stacked channel (N_u L, N_r),
    the per-subcarrier channel stack (N, N_u, N_r), the next symbols (N_u, N),
    and the Frobenius residual of the updated factorization."""
    n_u = x_hats.shape[0]
    n, n_r = ymat.shape
    l = f.n_taps
    if n_u * l > n_r:
        raise ValueError(f"need N_u L <= N_r, got {n_u} * {l} > {n_r}")
    if ws is None:
        ws = _MultiWorkspace(n, n_u, l, n_r)
    a = ws.a
    for u in range(n_u):
        np.multiply(x_hats[u][:, None], f.columns, out=a[:, u * l : (u + 1) * l])
    gram = a.conj().T @ a
    if mu:
        gram[np.diag_indices_from(gram)] += mu
    try:
        h_stack = np.linalg.solve(gram, a.conj().T @ ymat)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("singular multi-user channel system") from exc
    # b[n] stacks the users' frequency-channel rows for subcarrier n
    b_flat = ws.b.reshape(n, n_u * n_r)
    np.matmul(f.columns, h_stack.reshape(n_u, l, n_r).transpose(1, 0, 2).reshape(l, -1),
              out=b_flat)
    b = ws.b
    bc = np.conjugate(b, out=ws.bc)
    np.matmul(bc, b.transpose(0, 2, 1), out=ws.m)
    m = ws.m
    if mu:
        m[:, np.arange(n_u), np.arange(n_u)] += mu
    rhs = np.matmul(bc, ymat[:, :, None], out=ws.rhs)
    try:
        xc = np.linalg.solve(m, rhs)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("rank-deficient per-subcarrier system with mu=0") from exc
    # |Y - XB|^2 via the normal-equation pieces, avoiding an N x N_r rebuild
    if ws.y_power is None:
        ws.y_power = float(np.einsum("nr,nr->", ymat, ymat.conj()).real)
    xcc = xc.conj()
    res2 = (
        ws.y_power
        - 2.0 * float(np.einsum("nu,nu->", xcc, rhs[..., 0]).real)
        + float(np.einsum("nu,nuv,nv->", xcc, m, xc).real)
        - mu * float(np.einsum("nu,nu->", xcc, xc).real)
    )
    return h_stack, b, xc.T, float(np.sqrt(max(res2, 0.0)))


def am_step_multi(
    y, x_hats: np.ndarray, f: DftSubmatrix, mu: float
) -> tuple[list[TimeChannel], np.ndarray]:
    """One multi-user iteration.

    Channel update: regularized LS on the stacked system whose columns are the
    per-user symbol-weighted DFT columns. Symbol update: per subcarrier n, a
    regularized LS fit of the received row against the stacked user channel
    rows (reduces to MRC for one user as mu -> 0). Returns per-user channels
    and the (N_u, N) symbol estimates.
    """
    ymat = np.asarray(getattr(y, "y", y))
    x_hats = np.atleast_2d(np.asarray(x_hats))
    l = f.n_taps
    h_stack, _, x_next, _ = _am_multi_core(ymat, x_hats, f, mu)
    channels = [TimeChannel(h=h_stack[u * l : (u + 1) * l]) for u in range(x_hats.shape[0])]
    return channels, x_next


# ---------------------------------------------------------------------------
# scale-ambiguity resolution


def estimate_lambda(x_hat: np.ndarray, pilots: PilotSpec) -> complex:
    """Scale estimate from the rotational pilots: the mean of the per-pilot
    ratios ``x_hat[p] / P``. The convention is ``x_hat ~ lambda x_true``, so
    de-rotation divides by the returned value."""
    values = np.asarray(pilots.values)
    if np.any(values == 0):
        raise ValueError("pilot values must be nonzero")
    return complex(np.mean(x_hat[list(pilots.positions)] / values))


def _lloyd_kmeans(
    points: np.ndarray, centroids: np.ndarray, max_iter: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Plain Lloyd iterations on complex points; empty clusters are reseeded
    at the sample currently farthest from its centroid."""
    c = centroids.copy()
    assign = np.zeros(points.shape[0], dtype=np.int64)
    for _ in range(max_iter):
        d2 = np.abs(points[:, None] - c[None, :]) ** 2
        new_assign = np.argmin(d2, axis=1)
        counts = np.bincount(new_assign, minlength=c.shape[0])
        for k in np.flatnonzero(counts == 0):
            far = int(np.argmax(d2[np.arange(points.shape[0]), new_assign]))
            new_assign[far] = k
            d2[far, :] = 0.0
        if np.array_equal(new_assign, assign) and _ > 0:
            break
        assign = new_assign
        sums = np.zeros(c.shape[0], dtype=complex)
        np.add.at(sums, assign, points)
        counts = np.bincount(assign, minlength=c.shape[0])
        c = sums / counts
    return assign, c


def fit_row_rotation(points: np.ndarray, m: int) -> float:
    """Residual tilt, in radians, of a de-rotated centroid cloud.

    Ordinary least-squares line through the points whose hard decision lands
    in the constellation's top row; the arctangent of its slope is the
    remaining rotation. Returns 0 when fewer than two points qualify.
    """
    c = qam_constellation(m)
    top = np.flatnonzero(
        np.isclose(np.imag(c.points[demodulate_ints(points, m)]), (c.side - 1) * c.scale)
    )
    if top.size < 2:
        return 0.0
    px = points[top].real
    py = points[top].imag
    dx = px - px.mean()
    if np.sum(dx**2) == 0.0:
        return 0.0
    slope = np.sum(dx * (py - py.mean())) / np.sum(dx**2)
    return float(np.arctan(slope))


def derotate_cluster(x_hat: np.ndarray, pilot: PilotSpec, m: int) -> np.ndarray:
    """Residual de-rotation by clustering; returns hard symbol decisions.

    The estimate is normalized to unit average power, clustered by Lloyd's
    k-means seeded at the pilot-rotated constellation, and the final centroids
    are de-rotated by the pilot scale. The top-row line fit of
    :func:`fit_row_rotation` measures the residual rotation, which is removed
    before mapping each centroid (and with it every sample of its cluster) to
    a constellation point.
    """
    c = qam_constellation(m)
    if x_hat.shape[0] < m:
        raise ValueError(f"need at least {m} samples to fit {m} clusters")
    x = x_hat / np.sqrt(np.mean(np.abs(x_hat) ** 2))
    lam = estimate_lambda(x, pilot)
    assign, centroids = _lloyd_kmeans(x, lam * c.points)
    derotated = centroids / lam
    theta = fit_row_rotation(derotated, m)
    final = derotated * np.exp(-1j * theta)
    return nearest_constellation_point(final, m)[assign]


# ---------------------------------------------------------------------------
# multi-user unmixing


def estimate_coefficient_matrix(svd: SvdBasis, pilots) -> CoefficientMatrix:
    """Mixing-matrix estimate from one rotational pilot per user: entry (j, u)
    is left singular vector j evaluated at user u's pilot subcarrier, divided
    by the known pilot value."""
    pilots = tuple(pilots)
    n_u = len(pilots)
    if svd.k < n_u:
        raise ValueError(f"need {n_u} singular vectors, basis has {svd.k}")
    a = np.empty((n_u, n_u), dtype=complex)
    for u, spec in enumerate(pilots):
        p, value = spec.positions[0], spec.values[0]
        if value == 0:
            raise ValueError(f"pilot value of user {u} is zero")
        a[:, u] = svd.left_vectors[p, :n_u] / value
    matrix = CoefficientMatrix(a=a)
    if matrix.condition_number > 1e6:
        raise IllConditionedMixingError(
            f"mixing matrix condition number {matrix.condition_number:.3g} > 1e6"
        )
    return matrix


def multiuser_initial_points(
    svd: SvdBasis, a: CoefficientMatrix, f: DftSubmatrix
) -> list[tuple[np.ndarray, int]]:
    """Unmix the dominant singular vectors into per-user symbol directions and
    run the circularity tap search on each."""
    n_u = a.n_users
    z = np.linalg.solve(a.a, svd.left_vectors[:, :n_u].T)
    return [initial_point_circularity(z[u], f) for u in range(n_u)]


# ---------------------------------------------------------------------------
# decode pipelines


def _pin(x: np.ndarray, pilots: PilotSpec, zero_positions=()) -> np.ndarray:
    x[list(pilots.positions)] = np.asarray(pilots.values)
    if len(zero_positions):
        x[list(zero_positions)] = 0.0
    return x


def _data_positions(n: int, own: PilotSpec, others=()) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[list(own.positions)] = False
    for spec in others:
        mask[list(spec.positions)] = False
    return np.flatnonzero(mask)


def _single_user_initial(y, cfg: BlindConfig, f: DftSubmatrix) -> tuple[np.ndarray, int]:
    u1 = top_left_singular_vectors(y, 1).vector(0)
    if cfg.init == "variance":
        return initial_point_variance(u1, f)
    if cfg.init == "circularity":
        return initial_point_circularity(u1, f)
    if cfg.init == "given-tap":
        tap = cfg.given_taps[0]
        return u1 * np.conj(f.column(tap)), tap
    raise ValueError(f"init mode {cfg.init!r} is not valid here; "
                     "warm starts go through warm_start_decode")


def _finish_single(
    ymat, cfg, f, x, h, tap, lam, residuals, flagged, snapshots, iterations
) -> DecodeResult:
    data = _data_positions(f.n, cfg.pilots[0])
    ints = demodulate_ints(x[data], cfg.qam_order)
    return DecodeResult(
        symbols=x,
        hard_bits=qam_constellation(cfg.qam_order).bits_of(ints),
        lambda_hat=lam,
        h_hat=TimeChannel(h=h),
        dominant_tap=tap,
        iterations_used=iterations,
        residuals=tuple(residuals),
        flagged_subcarriers=tuple(sorted(flagged)),
        data_positions=data,
        iteration_hard_ints=tuple(snapshots) if snapshots is not None else None,
    )


def _run_single_loop(
    ymat: np.ndarray,
    x: np.ndarray,
    cfg: BlindConfig,
    f: DftSubmatrix,
    derotate_at: int,
    record_iterations: bool,
):
    """The shared iteration engine of the single-user pipelines."""
    pilot = cfg.pilots[0]
    data = _data_positions(f.n, pilot)
    residuals: list[float] = []
    flagged: set[int] = set()
    snapshots = [] if record_iterations else None
    lam = 1.0 + 0.0j
    h = None
    in_loop = cfg.derotation == "in-loop"
    y_power = float(np.einsum("nr,nr->", ymat, ymat.conj()).real)
    b = np.empty_like(ymat)
    bc = np.empty_like(ymat)
    for k in range(1, cfg.iterations + 1):
        h = regularized_ls_channel(x, f, ymat, cfg.mu)
        np.matmul(f.columns, h, out=b)
        x, zero, den = _mrc_parts(ymat, b, bc)
        flagged.update(np.flatnonzero(zero).tolist())
        # post-combining residual identity: |Y - XB|^2 = |Y|^2 - sum den |x|^2
        residuals.append(float(np.sqrt(max(y_power - float(den @ np.abs(x) ** 2), 0.0))))
        if in_loop:
            if k == derotate_at:
                lam = estimate_lambda(x, pilot)
                x = x / lam
            elif k > derotate_at:
                x = nearest_constellation_point(x, cfg.qam_order)
                _pin(x, pilot)
        if record_iterations:
            snapshots.append(demodulate_ints(x[data], cfg.qam_order))
    return x, h, lam, residuals, flagged, snapshots


def blind_decode_single(y, cfg: BlindConfig, record_iterations: bool = False) -> DecodeResult:
    """Full single-user blind decode.

    SVD initial point, ``iterations`` alternating-minimization steps, and the
    configured de-rotation: ``in-loop`` rescales by the pilot estimate at
    iteration ``derotate_at`` and hard-maps afterwards; ``lambda-only``
    rescales once after the last iteration; ``cluster`` runs the k-means
    module on the raw output instead.
    """
    ymat = np.asarray(getattr(y, "y", y))
    f = build_dft_submatrix(ymat.shape[0], cfg.delays)
    x0, tap = _single_user_initial(ymat, cfg, f)
    x, h, lam, residuals, flagged, snaps = _run_single_loop(
        ymat, x0, cfg, f, cfg.derotate_at, record_iterations
    )
    pilot = cfg.pilots[0]
    if cfg.derotation == "lambda-only":
        lam = estimate_lambda(x, pilot)
        x = x / lam
        _pin(x, pilot)
    elif cfg.derotation == "cluster":
        lam = estimate_lambda(x / np.sqrt(np.mean(np.abs(x) ** 2)), pilot)
        x = derotate_cluster(x, pilot, cfg.qam_order)
        _pin(x, pilot)
    return _finish_single(
        ymat, cfg, f, x, h, tap, complex(lam), residuals, flagged, snaps, cfg.iterations
    )


def warm_start_decode(
    y, h_prev: TimeChannel, cfg: BlindConfig, record_iterations: bool = False
) -> DecodeResult:
    """Decode a later OFDM symbol starting from a previous channel estimate.

    Skips the SVD and tap search: a half-step MRC against ``h_prev`` seeds the
    symbol estimate, and the de-rotation schedule is re-based to iteration
    ``min(derotate_at, 2)`` since the start is already near the solution.
    """
    ymat = np.asarray(getattr(y, "y", y))
    f = build_dft_submatrix(ymat.shape[0], cfg.delays)
    if h_prev.h.shape != (f.n_taps, ymat.shape[1]):
        raise ValueError(
            f"h_prev shape {h_prev.h.shape} does not match (L={f.n_taps}, N_r={ymat.shape[1]})"
        )
    x0, _ = _mrc_update(ymat, f.columns @ h_prev.h)
    derotate_at = min(cfg.derotate_at, 2, cfg.iterations)
    x, h, lam, residuals, flagged, snaps = _run_single_loop(
        ymat, x0, cfg, f, derotate_at, record_iterations
    )
    if cfg.iterations == derotate_at:
        _pin(x, cfg.pilots[0])
    return _finish_single(
        ymat, cfg, f, x, h, None, complex(lam), residuals, flagged, snaps, cfg.iterations
    )


def blind_decode_multi(y, cfg: BlindConfig, record_iterations: bool = False):
    """Full multi-user blind decode; returns one DecodeResult per user.

    Pipeline: top-``N_u`` singular vectors, mixing-matrix estimate from the
    per-user pilots, unmixing into per-user initial points (circularity tap
    search unless taps are given), then joint alternating minimization with
    per-user de-rotation at ``derotate_at`` and per-user hard mapping after.
    Each user's own pilot is pinned to its known value and the other users'
    pilot subcarriers are pinned to zero, which the receiver knows carry no
    data of this user.
    """
    ymat = np.asarray(getattr(y, "y", y))
    f = build_dft_submatrix(ymat.shape[0], cfg.delays)
    n_u = cfg.n_users
    if n_u == 1:
        return (blind_decode_single(y, cfg, record_iterations),)
    svd = top_left_singular_vectors(ymat, n_u)
    taps: list[int]
    x = np.empty((n_u, f.n), dtype=complex)
    try:
        mixing = estimate_coefficient_matrix(svd, cfg.pilots)
    except IllConditionedMixingError:
        if cfg.given_taps is None:
            raise
        # fallback: skip unmixing, seed each user from its own singular vector
        taps = list(cfg.given_taps)
        for u in range(n_u):
            x[u] = svd.vector(u) * np.conj(f.column(taps[u]))
    else:
        if cfg.init == "given-tap":
            taps = list(cfg.given_taps)
            z = np.linalg.solve(mixing.a, svd.left_vectors[:, :n_u].T)
            for u in range(n_u):
                x[u] = z[u] * np.conj(f.column(taps[u]))
        else:
            points = multiuser_initial_points(svd, mixing, f)
            taps = [tap for _, tap in points]
            for u, (x0, _) in enumerate(points):
                x[u] = x0

    lams = np.ones(n_u, dtype=complex)
    residuals: list[float] = []
    snapshots = [[] for _ in range(n_u)] if record_iterations else None
    data = [
        _data_positions(f.n, cfg.pilots[u], [cfg.pilots[v] for v in range(n_u) if v != u])
        for u in range(n_u)
    ]
    other_positions = [
        [p for v in range(n_u) if v != u for p in cfg.pilots[v].positions] for u in range(n_u)
    ]
    h_stack = None
    ws = _MultiWorkspace(f.n, n_u, f.n_taps, ymat.shape[1])
    for k in range(1, cfg.iterations + 1):
        h_stack, _, x, res = _am_multi_core(ymat, x, f, cfg.mu, ws)
        residuals.append(res)
        if k == cfg.derotate_at:
            for u in range(n_u):
                lams[u] = estimate_lambda(x[u], cfg.pilots[u])
                x[u] = x[u] / lams[u]
        elif k > cfg.derotate_at:
            for u in range(n_u):
                x[u] = nearest_constellation_point(x[u], cfg.qam_order)
                _pin(x[u], cfg.pilots[u], other_positions[u])
        if record_iterations:
            for u in range(n_u):
                snapshots[u].append(demodulate_ints(x[u][data[u]], cfg.qam_order))

    c = qam_constellation(cfg.qam_order)
    l = f.n_taps
    results = []
    for u in range(n_u):
        ints = demodulate_ints(x[u][data[u]], cfg.qam_order)
        results.append(
            DecodeResult(
                symbols=x[u],
                hard_bits=c.bits_of(ints),
                lambda_hat=complex(lams[u]),
                h_hat=TimeChannel(h=h_stack[u * l : (u + 1) * l]),
                dominant_tap=taps[u],
                iterations_used=cfg.iterations,
                residuals=tuple(residuals),
                data_positions=data[u],
                iteration_hard_ints=tuple(snapshots[u]) if record_iterations else None,
            )
        )
    return tuple(results)
