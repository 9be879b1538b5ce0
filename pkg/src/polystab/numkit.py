"""Dense complex linear algebra substrate.

Vectors and matrices are plain ``numpy`` arrays of dtype ``complex128``.
The eigen-solver is self-contained (Householder-Hessenberg reduction followed
by single-shift complex QR iteration); kernels come from the SVD.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, DimensionError

EPS = np.finfo(float).eps
MAX_EIGEN_DIM = 64
DEFAULT_KERNEL_TOL = 1e-9

__all__ = [
    "as_matrix",
    "as_vector",
    "inner",
    "norm",
    "adjoint",
    "matmul",
    "mat_power",
    "hessenberg",
    "schur",
    "eigen",
    "kernel_basis",
    "orthonormalize",
    "op_norm",
    "subspace_angle",
]


def as_vector(v) -> np.ndarray:
    """Return ``v`` as a finite 1-d complex array."""
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite entries")
    return arr


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-d complex array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or 0 in arr.shape:
        raise DimensionError(f"expected a non-empty matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def inner(u, v) -> complex:
    """Inner product, conjugate-linear in the first argument."""
    return complex(np.vdot(u, v))


def norm(v) -> float:
    return float(np.linalg.norm(v))


def adjoint(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[-1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def mat_power(m, n: int) -> np.ndarray:
    """``m**n`` by binary exponentiation; ``mat_power(m, 0)`` is the identity."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError("mat_power needs a square matrix")
    n = int(n)
    if n < 0:
        raise ValueError("exponent must be nonnegative")
    result = np.eye(m.shape[0], dtype=complex)
    base = m.copy()
    while n:
        if n & 1:
            result = result @ base
        n >>= 1
        if n:
            base = base @ base
    return result


def hessenberg(m) -> tuple[np.ndarray, np.ndarray]:
    """Householder reduction ``m = Q H Q*`` with ``H`` upper Hessenberg."""
    h = as_matrix(m).copy()
    n = h.shape[0]
    q = np.eye(n, dtype=complex)
    for j in range(n - 2):
        x = h[j + 1:, j].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        # P = I - 2 v v*
        h[j + 1:, :] -= 2.0 * np.outer(v, np.conj(v) @ h[j + 1:, :])
        h[:, j + 1:] -= 2.0 * np.outer(h[:, j + 1:] @ v, np.conj(v))
        q[:, j + 1:] -= 2.0 * np.outer(q[:, j + 1:] @ v, np.conj(v))
        h[j + 2:, j] = 0.0
    return h, q


def _givens(x: complex, y: complex) -> tuple[float, complex]:
    # G = [[c, s], [-conj(s), c]] maps (x, y) to (r, 0)
    ax, ay = abs(x), abs(y)
    if ay == 0.0:
        return 1.0, 0.0
    if ax == 0.0:
        return 0.0, np.conj(y) / ay
    r = np.hypot(ax, ay)
    return ax / r, (x / ax) * np.conj(y) / r


def schur(m, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form ``m = Z T Z*`` via shifted QR on the Hessenberg form.

    ``max_sweeps`` bounds the number of QR steps spent on any single
    eigenvalue; exceeding it raises :class:`ConvergenceError`.
    """
    h, z = hessenberg(m)
    n = h.shape[0]
    scale = max(np.abs(h).max(), np.finfo(float).tiny)
    hi = n - 1
    its = 0
    while hi > 0:
        l = hi
        while l > 0:
            off = abs(h[l, l - 1])
            diag = abs(h[l - 1, l - 1]) + abs(h[l, l])
            if off <= EPS * (diag if diag > 0 else scale):
                h[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            hi -= 1
            its = 0
            continue
        its += 1
        if its > max_sweeps:
            raise ConvergenceError(
                f"QR iteration did not converge for eigenvalue index {hi} "
                f"after {max_sweeps} sweeps"
            )
        if its % 11 == 0:
            # exceptional shift to break cycles
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            a, b = h[hi - 1, hi - 1], h[hi - 1, hi]
            c, d = h[hi, hi - 1], h[hi, hi]
            half = 0.5 * (a - d)
            disc = np.sqrt(half * half + b * c)
            mu1, mu2 = d - half + disc, d - half - disc
            mu = mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2
        idx = np.arange(l, hi + 1)
        h[idx, idx] -= mu
        rots = []
        for j in range(l, hi):
            c, s = _givens(h[j, j], h[j + 1, j])
            rj = h[j, j:].copy()
            rj1 = h[j + 1, j:].copy()
            h[j, j:] = c * rj + s * rj1
            h[j + 1, j:] = -np.conj(s) * rj + c * rj1
            h[j + 1, j] = 0.0
            rots.append((j, c, s))
        for j, c, s in rots:
            top = min(j + 2, hi) + 1
            cj = h[:top, j].copy()
            cj1 = h[:top, j + 1].copy()
            h[:top, j] = c * cj + np.conj(s) * cj1
            h[:top, j + 1] = -s * cj + c * cj1
            zj = z[:, j].copy()
            zj1 = z[:, j + 1].copy()
            z[:, j] = c * zj + np.conj(s) * zj1
            z[:, j + 1] = -s * zj + c * zj1
        h[idx, idx] += mu
    return np.triu(h), z


def _triangular_eigvecs(t: np.ndarray) -> np.ndarray:
    n = t.shape[0]
    small = EPS * max(np.abs(t).max(), np.finfo(float).tiny)
    x = np.zeros((n, n), dtype=complex)
    for k in range(n):
        lam = t[k, k]
        x[k, k] = 1.0
        for j in range(k - 1, -1, -1):
            denom = t[j, j] - lam
            if abs(denom) < small:
                denom = small
            x[j, k] = -(t[j, j + 1:k + 1] @ x[j + 1:k + 1, k]) / denom
            # rescale on the fly; defective eigenvalues make entries blow up
            big = abs(x[j, k])
            if big > 1e100:
                x[:k + 1, k] /= big
        x[:, k] /= np.linalg.norm(x[:, k])
    return x


def eigen(m, tol: float = 1e-8, max_sweeps: int = 60) -> list[tuple[complex, np.ndarray]]:
    """Eigenpairs of a square matrix of dimension at most 64.

    Returns ``(eigenvalue, unit eigenvector)`` pairs, one per eigenvalue
    counted with algebraic multiplicity. Each pair satisfies
    ``||M v - lambda v|| <= tol * ||M||``; a violation is reported as
    :class:`ConvergenceError` rather than returned.
    """
    m = as_matrix(m)
    n = m.shape[0]
    if n != m.shape[1]:
        raise DimensionError("eigen needs a square matrix")
    if n > MAX_EIGEN_DIM:
        raise DimensionError(f"eigen is capped at dimension {MAX_EIGEN_DIM}")
    t, z = schur(m, max_sweeps=max_sweeps)
    vecs = z @ _triangular_eigvecs(t)
    vecs /= np.linalg.norm(vecs, axis=0)
    lams = np.diag(t).copy()
    mnorm = np.linalg.norm(m, 2) if n > 1 else abs(m[0, 0])
    resid = np.linalg.norm(m @ vecs - vecs * lams, axis=0)
    bad = ~(resid <= tol * max(mnorm, np.finfo(float).tiny))
    if np.any(bad):
        raise ConvergenceError(
            f"eigenpair residual {resid.max():.3e} exceeds tolerance {tol:.1e}"
        )
    return [(complex(lams[k]), vecs[:, k]) for k in range(n)]


def kernel_basis(m, tol: float = DEFAULT_KERNEL_TOL, atol: float = 0.0) -> list[np.ndarray]:
    """Orthonormal basis of the numerical kernel of ``m``.

    Singular values below ``tol`` times the largest one count as zero, as do
    those below the absolute floor ``atol`` (useful when ``m`` may itself be
    numerically zero).
    """
    m = as_matrix(m)
    ncols = m.shape[1]
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    if s.size == 0 or s[0] <= atol:
        return [np.eye(ncols, dtype=complex)[:, j] for j in range(ncols)]
    rank = int(np.sum(s > max(tol * s[0], atol)))
    return [np.conj(vh[j]) for j in range(rank, ncols)]


def orthonormalize(vectors, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (as columns) of the span of ``vectors``."""
    vectors = list(vectors)
    if not vectors:
        return np.zeros((0, 0), dtype=complex)
    a = np.column_stack(vectors).astype(complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    rank = int(np.sum(s > tol * s[0]))
    return u[:, :rank]


def op_norm(m, tol: float = 1e-12, max_iter: int = 20000) -> float:
    """Largest singular value by power iteration on ``m* m``."""
    m = as_matrix(m)
    gram = adjoint(m) @ m
    rng = np.random.default_rng(0)
    x = rng.standard_normal(m.shape[1]) + 1j * rng.standard_normal(m.shape[1])
    x += np.abs(m).sum(axis=0)
    nx = np.linalg.norm(x)
    x /= nx
    est = 0.0
    for _ in range(max_iter):
        y = gram @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        new = float(np.real(np.vdot(x, y)))
        x = y / ny
        if abs(new - est) <= tol * max(new, np.finfo(float).tiny):
            est = new
            break
        est = new
    # Rayleigh quotient with the final iterate
    est = max(est, float(np.real(np.vdot(x, gram @ x))))
    return float(np.sqrt(max(est, 0.0)))


def subspace_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle between the column spans of ``a`` and ``b``.

    Both arguments are orthonormal column bases of equal dimension.
    """
    if a.shape[1] != b.shape[1]:
        raise DimensionError("subspaces have different dimensions")
    if a.shape[1] == 0:
        return 0.0
    # sine of the largest angle = norm of the component of b outside span(a)
    resid = b - a @ (adjoint(a) @ b)
    return float(np.arcsin(min(1.0, np.linalg.norm(resid, 2))))
