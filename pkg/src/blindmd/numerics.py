"""Complex linear-algebra primitives for the receiver.

Covers construction of the tap-delay DFT submatrix, access to dominant left
singular vectors of the received matrix, and the regularized least-squares
solve for the time-domain channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class SingularSystemError(np.linalg.LinAlgError):
    """The unregularized channel solve hit a singular normal-equation system."""


@dataclass(frozen=True)
class DftSubmatrix:
    """Columns of the N x N DFT matrix selected at integer tap delays.

    Column i has entries ``exp(-2j pi m delays[i] / n)`` for m = 0..n-1, so
    every column has squared norm n and distinct delays give exactly
    orthogonal columns.
    """

    n: int
    delays: tuple[int, ...]
    columns: np.ndarray = field(repr=False)

    @property
    def n_taps(self) -> int:
        return len(self.delays)

    def column(self, delay: int) -> np.ndarray:
        return self.columns[:, self.delays.index(delay)]


def build_dft_submatrix(n: int, delays) -> DftSubmatrix:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    delays = tuple(int(d) for d in delays)
    seen = set()
    for d in delays:
        if not 0 <= d < n:
            raise ValueError(f"delay {d} outside [0, {n})")
        if d in seen:
            raise ValueError(f"duplicate delay {d}")
        seen.add(d)
    m = np.arange(n)
    columns = np.exp(-2j * np.pi * np.outer(m, delays) / n)
    columns.flags.writeable = False
    return DftSubmatrix(n=n, delays=delays, columns=columns)


@dataclass(frozen=True)
class SvdBasis:
    """Dominant left singular vectors (columns of ``left_vectors``) with their
    singular values, nonincreasing. Each vector is defined only up to a global
    unit-modulus phase; callers must not rely on that phase."""

    left_vectors: np.ndarray = field(repr=False)  # (n, k), columns unit norm
    singular_values: np.ndarray = field(repr=False)  # (k,), nonincreasing

    @property
    def k(self) -> int:
        return self.left_vectors.shape[1]

    def vector(self, i: int) -> np.ndarray:
        return self.left_vectors[:, i]


def top_left_singular_vectors(y, k: int) -> SvdBasis:
    """The k dominant left singular vectors and singular values of the
    received matrix.

    Accepts a ReceivedMatrix or a plain (N, N_r) array. For the tall matrices
    here (N >> N_r) the dominant triplets come from the eigen-decomposition of
    the small Gram matrix Y^H Y at O(N N_r^2 + N_r^3); the thin SVD is the
    fallback when the requested singular values are too small for that route.
    """
    ymat = np.asarray(getattr(y, "y", y))
    n, n_r = ymat.shape
    if not 1 <= k <= min(n, n_r):
        raise ValueError(f"k={k} outside [1, min({n}, {n_r})]")
    if n >= 2 * n_r:
        w, v = np.linalg.eigh(ymat.conj().T @ ymat)
        w = w[::-1][:k]
        v = v[:, ::-1][:, :k]
        s = np.sqrt(np.clip(w, 0.0, None))
        if s[-1] > 1e-7 * max(s[0], 1e-300):
            u = (ymat @ v) / s
            return SvdBasis(left_vectors=u, singular_values=s)
    u, s, _ = np.linalg.svd(ymat, full_matrices=False)
    return SvdBasis(left_vectors=u[:, :k], singular_values=s[:k])


def _as_symbols(x) -> np.ndarray:
    return np.asarray(getattr(x, "symbols", x))


def regularized_ls_channel(x_hat, f: DftSubmatrix, y, mu: float) -> np.ndarray:
    """Tikhonov-regularized LS estimate of the time-domain channel.

    Solves ``(F^H X^H X F + mu I) H = F^H X^H Y`` by Cholesky factorization of
    the Hermitian positive-definite left side; the Gram matrix exploits the
    diagonal symbol matrix and costs O(L^2 N). Returns the (L, N_r) channel.
    """
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    x = _as_symbols(x_hat)
    ymat = np.asarray(getattr(y, "y", y))
    if x.shape[0] != f.n or ymat.shape[0] != f.n:
        raise ValueError(
            f"dimension mismatch: n={f.n}, x has {x.shape[0]}, y has {ymat.shape[0]} rows"
        )
    xf = x[:, None] * f.columns
    gram = xf.conj().T @ xf
    if mu:
        gram[np.diag_indices_from(gram)] += mu
    rhs = xf.conj().T @ ymat
    try:
        factor = cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "singular channel system; all-zero symbol estimate with mu=0?"
        ) from exc
    return cho_solve(factor, rhs, check_finite=False)
