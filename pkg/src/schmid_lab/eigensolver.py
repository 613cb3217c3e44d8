"""Lowest eigenpairs of large real symmetric operators.

Block Lanczos with full reorthogonalization and thick restarts: the
projected matrix is kept explicitly, the lowest Ritz vectors are retained at
each restart and the Krylov block is rebuilt from the residual block.  A block
(rather than a single vector) is needed to resolve exactly degenerate levels,
which a single-vector Krylov space cannot see in exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotConverged

DENSE_THRESHOLD = 2000
_START_SEED = 20240607


@dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    method: str

    @property
    def k(self) -> int:
        return self.eigenvalues.size


def _as_dense(h) -> np.ndarray:
    if hasattr(h, "toarray"):
        return np.asarray(h.toarray())
    return np.asarray(h)


def _apply(h, x: np.ndarray) -> np.ndarray:
    return np.asarray(h @ x)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        thresh = 1e-8 * np.max(np.abs(col))
        first = np.flatnonzero(np.abs(col) > thresh)
        if first.size and col[first[0]] < 0:
            out[:, j] = -col
    return out


def _residuals(h, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    if values.size == 0:
        return np.empty(0)
    hv = _apply(h, vectors)
    return np.linalg.norm(hv - vectors * values[None, :], axis=0)


def dense_eigenpairs(h, k: int) -> EigResult:
    mat = _as_dense(h)
    k = min(k, mat.shape[0])
    values, vectors = scipy.linalg.eigh(mat, subset_by_index=(0, k - 1))
    vectors = _fix_signs(vectors)
    return EigResult(values, vectors, _residuals(mat, values, vectors), 0, "dense")


def _orthonormalize_block(w: np.ndarray, basis: np.ndarray, rng, thresh: float):
    """Orthonormalize the rows of ``w`` among themselves, assuming they are
    already orthogonal to the rows of ``basis``.

    Returns ``(q, r)`` with ``w = r^T q``; a near-dependent row is replaced by
    a random direction orthogonal to everything, with a zero row in ``r``.
    """
    b, n = w.shape
    q = np.empty((b, n))
    r = np.zeros((b, b))
    for j in range(b):
        v = w[j].copy()
        coef = np.zeros(j)
        for _ in range(2):
            c = q[:j] @ v
            v -= c @ q[:j]
            coef += c
        norm = np.linalg.norm(v)
        r[:j, j] = coef
        if norm > thresh:
            q[j] = v / norm
            r[j, j] = norm
            continue
        v = rng.standard_normal(n)
        for _ in range(3):
            v -= (basis @ v) @ basis
            v -= (q[:j] @ v) @ q[:j]
        q[j] = v / np.linalg.norm(v)
    return q, r


def lanczos_eigenpairs(
    h,
    k: int,
    tol: float = 1e-10,
    *,
    block_size: int = 3,
    subspace: int | None = None,
    max_restarts: int | None = None,
) -> EigResult:
    """Block thick-restart Lanczos for the ``k`` lowest eigenpairs.

    The start block is deterministic: an all-ones vector followed by seeded
    pseudo-random vectors.  Convergence is declared when every wanted Ritz
    residual is below ``tol`` times the current spectral-span estimate.
    """
    n = h.shape[0]
    b = block_size
    m = subspace or max(4 * k, k + 8 * b)
    m = b * -(-m // b)
    if n <= m + 2 * b:
        return dense_eigenpairs(h, k)
    keep = min(m - b, max(k + b, (m + k) // 2))
    max_restarts = 50 * k if max_restarts is None else max_restarts
    rng = np.random.default_rng(_START_SEED)

    # Krylov vectors are stored as rows so every slice is contiguous.
    basis = np.zeros((m + b, n))
    t = np.zeros((m + b, m + b))
    start = rng.standard_normal((b, n))
    start[0] = 1.0
    basis[:b], _ = _orthonormalize_block(start, basis[:0], rng, 0.0)
    cur = 0
    restarts = 0
    matvecs = 0
    scale = 0.0
    while True:
        w = np.ascontiguousarray(_apply(h, basis[cur:cur + b].T).T)
        matvecs += b
        active = basis[:cur + b]
        coef = active @ w.T
        w -= coef.T @ active
        coef2 = active @ w.T
        w -= coef2.T @ active
        coef += coef2
        t[:cur + b, cur:cur + b] = coef
        t[cur:cur + b, :cur + b] = coef.T
        scale = max(scale, np.max(np.abs(coef)))
        q, r = _orthonormalize_block(w, active, rng, 1e-12 * scale)
        cur += b
        basis[cur:cur + b] = q
        t[cur:cur + b, cur - b:cur] = r
        t[cur - b:cur, cur:cur + b] = r.T

        if cur < k:
            continue
        theta, s = scipy.linalg.eigh(t[:cur, :cur])
        resid = np.linalg.norm(r @ s[cur - b:cur, :], axis=0)
        span = max(theta[-1] - theta[0], np.max(np.abs(theta)), np.finfo(float).tiny)
        if np.all(resid[:k] <= tol * span):
            vectors = (s[:, :k].T @ basis[:cur]).T
            vectors, values = _polish(h, vectors)
            vectors = _fix_signs(vectors)
            return EigResult(values, vectors, _residuals(h, values, vectors), matvecs, "lanczos")
        if cur + b <= m:
            continue
        if restarts >= max_restarts:
            vectors = (s[:, :k].T @ basis[:cur]).T
            raise NotConverged(
                f"Lanczos did not converge after {restarts} restarts "
                f"(max residual {resid[:k].max():.3g}, target {tol * span:.3g})",
                eigenvalues=theta[:k],
                eigenvectors=vectors,
                residuals=resid[:k],
                iterations=matvecs,
            )
        restarts += 1
        kept = s[:, :keep].T @ basis[:cur]
        tail = basis[cur:cur + b].copy()
        couple = r @ s[cur - b:cur, :keep]
        basis[:keep] = kept
        basis[keep:keep + b] = tail
        basis[keep + b:] = 0.0
        t[:] = 0.0
        t[:keep, :keep] = np.diag(theta[:keep])
        t[keep:keep + b, :keep] = couple
        t[:keep, keep:keep + b] = couple.T
        cur = keep


def _polish(h, vectors: np.ndarray):
    """Final Rayleigh-Ritz on the converged vectors (re-orthonormalized)."""
    q, _ = np.linalg.qr(vectors)
    hq = _apply(h, q)
    small = q.T @ hq
    values, s = scipy.linalg.eigh(0.5 * (small + small.T))
    return q @ s, values


def lowest_eigenpairs(
    h,
    k: int = 12,
    tol: float = 1e-10,
    *,
    method: str = "auto",
    dense_threshold: int = DENSE_THRESHOLD,
    block_size: int = 3,
    max_restarts: int | None = None,
) -> EigResult:
    """``k`` smallest eigenpairs of a real symmetric operator.

    ``method="auto"`` uses dense LAPACK when ``dim <= dense_threshold`` and
    block Lanczos otherwise; ``"dense"`` and ``"lanczos"`` force a path.
    ``h`` may be a ``SparseBlock``, a scipy sparse matrix or a dense array.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = h.shape[0]
    k = min(k, n)
    if method == "auto":
        method = "dense" if n <= dense_threshold else "lanczos"
    if method == "dense":
        return dense_eigenpairs(h, k)
    if method == "lanczos":
        return lanczos_eigenpairs(h, k, tol, block_size=block_size, max_restarts=max_restarts)
    raise ValueError(f"unknown method {method!r}")
