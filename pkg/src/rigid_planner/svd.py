"""Interchangeable singular-value computations.

Three backends with one result type: an exact dense SVD (the slow
reference), a randomized range-sketch SVD, and a first-order update of a
single singular value from a previously computed decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np
import scipy.linalg

# Sketch columns whose QR pivot falls below this fraction of ||Y||_F are
# treated as numerically rank-deficient and dropped.
QR_DROP_RTOL = 1e-12

# Singular-value gaps below this fraction of sigma_1 make the first-order
# update formula untrustworthy (it assumes distinct singular values).
DEFAULT_GAP_RTOL = 1e-8


@dataclass(frozen=True)
class SvdResult:
    """Top-k singular triplets of a real matrix.

    U has shape (m, k), S is the k singular values in nonincreasing order,
    V has shape (n, k).  ``deficient`` marks results where the requested k
    exceeded the numerical rank of the range sketch; trailing singular
    values are then zero and the trailing columns of U and V are an
    arbitrary orthonormal completion.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    k: int
    deficient: bool = False


@dataclass(frozen=True)
class FullSvd:
    """Exact dense SVD via the classical Golub-Reinsch driver (gesvd)."""


@dataclass(frozen=True)
class RandomizedSvd:
    """Randomized range-sketch SVD; deterministic for a fixed seed."""

    seed: int = 0


@dataclass(frozen=True)
class SmoothSvd:
    """First-order singular-value tracking from an anchor decomposition.

    ``anchor`` must be an SVD of ``anchor_matrix``.  If ``fallback_seed``
    is given, unreliable updates (near-degenerate singular values) fall
    back to a randomized evaluation with that seed.
    """

    anchor: SvdResult
    anchor_matrix: np.ndarray
    fallback_seed: Optional[int] = None


SvdBackend = Union[FullSvd, RandomizedSvd, SmoothSvd]


class SmoothEstimate(NamedTuple):
    value: float
    unreliable: bool


def _validated(matrix: np.ndarray) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def full_svd(matrix: np.ndarray, k: int) -> SvdResult:
    """Exact top-k singular triplets of a dense real matrix.

    Uses the classical QR-iteration LAPACK driver with vector
    accumulation; this is the unoptimized baseline the cheaper backends
    are measured against.
    """
    a = _validated(matrix)
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} out of range for a {m}x{n} matrix")
    u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
    return SvdResult(U=np.ascontiguousarray(u[:, :k]), S=s[:k].copy(),
                     V=np.ascontiguousarray(vt[:k].T), k=k)


def _orthonormal_range(y: np.ndarray, scale: float) -> np.ndarray:
    """Orthonormal basis for the columns of the sketch Y.

    Reduced QR; trailing columns whose diagonal entry is below
    QR_DROP_RTOL * ||Y||_F are dropped so a rank-deficient sketch yields a
    thin basis instead of noise directions.
    """
    q, r = np.linalg.qr(y)
    if scale == 0.0:
        return q[:, :0]
    diag = np.abs(np.diag(r))
    keep = 0
    for d in diag:
        if d <= QR_DROP_RTOL * scale:
            break
        keep += 1
    return q[:, :keep]


def _complete_basis(q: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Extend the orthonormal columns of q to k columns."""
    m, r = q.shape
    extra = rng.standard_normal((m, k - r))
    full, _ = np.linalg.qr(np.hstack([q, extra]))
    return np.hstack([q, full[:, r:k]])


def randomized_svd(matrix: np.ndarray, k: int, seed: int) -> SvdResult:
    """Approximate top-k SVD via a Gaussian range sketch.

    Pipeline: draw Omega (n x p, p = min(2k, n)) from the seeded
    generator, sketch Y = R @ Omega, orthonormalize Y into Q, project
    B = Q.T @ R, take the exact SVD of B and map the left vectors back
    through Q.  Deterministic for a fixed seed.  If the sketch has rank
    below k the result is padded with zero singular values and flagged
    ``deficient``.
    """
    a = _validated(matrix)
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} out of range for a {m}x{n} matrix")
    rng = np.random.default_rng(seed)
    p = min(2 * k, n)
    omega = rng.standard_normal((n, p))
    y = a @ omega
    q = _orthonormal_range(y, float(np.linalg.norm(y)))
    b = q.T @ a
    ub, s, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ ub
    r = min(k, u.shape[1])
    deficient = r < k
    if deficient:
        s_out = np.zeros(k)
        s_out[:r] = s[:r]
        u_out = _complete_basis(u[:, :r], k, rng)
        v_out = _complete_basis(np.ascontiguousarray(vt[:r].T), k, rng)
    else:
        s_out = s[:k].copy()
        u_out = np.ascontiguousarray(u[:, :k])
        v_out = np.ascontiguousarray(vt[:k].T)
    return SvdResult(U=u_out, S=s_out, V=v_out, k=k, deficient=deficient)


def randomized_singular_values(matrix: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, bool]:
    """Singular values from the same sketch pipeline, skipping the vector
    reconstruction.

    Identical values to ``randomized_svd`` for the same seed; used where
    only the spectrum is consumed (objective evaluation, pruning).
    """
    a = _validated(matrix)
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} out of range for a {m}x{n} matrix")
    rng = np.random.default_rng(seed)
    p = min(2 * k, n)
    omega = rng.standard_normal((n, p))
    y = a @ omega
    q = _orthonormal_range(y, float(np.linalg.norm(y)))
    s = np.linalg.svd(q.T @ a, compute_uv=False)
    r = min(k, s.shape[0])
    out = np.zeros(k)
    out[:r] = s[:r]
    return out, r < k


def _gap_unreliable(s: np.ndarray, k: int, j: int, gap_rtol: float) -> bool:
    """True when sigma_j is too close to a neighbor for the diagonal
    derivative formula to hold.

    Singular values beyond the anchor's k are taken as zero, which is
    exact for rigidity matrices anchored at their rank boundary.
    """
    jj = j - 1
    top = float(s[0])
    if top <= 0.0:
        return True
    upper = s[jj - 1] - s[jj] if jj > 0 else np.inf
    lower = s[jj] - s[jj + 1] if jj + 1 < k else s[jj]
    return bool(min(upper, lower) < gap_rtol * top)


def smooth_sv(anchor: SvdResult, base_matrix: np.ndarray, new_matrix: np.ndarray,
              j: int, gap_rtol: float = DEFAULT_GAP_RTOL) -> SmoothEstimate:
    """First-order estimate of the j-th singular value of ``new_matrix``.

    With anchor = SVD of ``base_matrix``, the derivative of sigma_j along
    the matrix path is the (j, j) entry of U0^T dR V0, so
    sigma_j(new) ~= sigma_j(base) + u_j^T (new - base) v_j.  Only that one
    entry is formed (two vector products, never the full projected
    matrix).  ``j`` is 1-based into the nonincreasing singular values.
    ``unreliable`` is set when a neighboring singular value sits within
    gap_rtol * sigma_1, where the diagonal formula breaks down.
    """
    if j < 1 or j > anchor.k:
        raise ValueError(f"j={j} outside the anchor's {anchor.k} triplets")
    r0 = np.asarray(base_matrix, dtype=float)
    r1 = np.asarray(new_matrix, dtype=float)
    if r0.shape != r1.shape:
        raise ValueError(f"shape mismatch {r0.shape} vs {r1.shape}")
    jj = j - 1
    u = anchor.U[:, jj]
    v = anchor.V[:, jj]
    value = float(anchor.S[jj] + u @ ((r1 - r0) @ v))
    return SmoothEstimate(value, _gap_unreliable(anchor.S, anchor.k, j, gap_rtol))


def smooth_sv_rows(anchor: SvdResult, row_indices: np.ndarray,
                   base_rows: np.ndarray, new_rows: np.ndarray,
                   j: int, gap_rtol: float = DEFAULT_GAP_RTOL) -> SmoothEstimate:
    """``smooth_sv`` restricted to the rows that changed.

    Exact shortcut for the common case where new_matrix differs from
    base_matrix only on ``row_indices``: rows with zero difference
    contribute nothing to u_j^T dR v_j.
    """
    if j < 1 or j > anchor.k:
        raise ValueError(f"j={j} outside the anchor's {anchor.k} triplets")
    jj = j - 1
    u = anchor.U[row_indices, jj]
    v = anchor.V[:, jj]
    value = float(anchor.S[jj] + u @ ((new_rows - base_rows) @ v))
    return SmoothEstimate(value, _gap_unreliable(anchor.S, anchor.k, j, gap_rtol))
