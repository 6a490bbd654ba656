"""Dense linear algebra kernels.

Small, dependency-free (numpy only) routines used throughout the package:
Cholesky factorization, Householder QR with optional column pivoting,
minimum-norm least squares through a complete orthogonal decomposition,
and eigenvalues of real nonsymmetric matrices (balancing, Hessenberg
reduction and the Francis double-shift QR iteration).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "LinAlgError",
    "NotPositiveDefiniteError",
    "IndefiniteNormError",
    "ConvergenceError",
    "cholesky",
    "householder_qr",
    "minnorm_solve",
    "solve_lower",
    "solve_upper",
    "hessenberg",
    "eig_general",
    "w_orthonormal_complement",
    "max_symmetric_eig",
]


class LinAlgError(ValueError):
    pass


class NotPositiveDefiniteError(LinAlgError):
    def __init__(self, index: int, pivot: float):
        super().__init__(f"matrix is not positive definite (pivot {index} = {pivot:.3e})")
        self.index = index
        self.pivot = pivot


class IndefiniteNormError(LinAlgError):
    pass


class ConvergenceError(LinAlgError):
    def __init__(self, index: int, iterations: int):
        super().__init__(
            f"QR iteration stalled at subdiagonal index {index} after {iterations} iterations"
        )
        self.index = index
        self.iterations = iterations


def _scale(A: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0


def cholesky(M: np.ndarray) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == M`` for symmetric positive-definite ``M``."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise LinAlgError("cholesky expects a square matrix")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * _scale(M)):
        raise LinAlgError("cholesky expects a symmetric matrix")
    L = np.zeros_like(M)
    for j in range(n):
        d = M[j, j] - L[j, :j] @ L[j, :j]
        if not d > 0.0:
            raise NotPositiveDefiniteError(j, d)
        L[j, j] = math.sqrt(d)
        L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def _householder_vector(x: np.ndarray) -> tuple[np.ndarray, float, float]:
    # reflector H = I - beta v v^T with H x = alpha e_1, v[0] = 1
    sigma = float(np.linalg.norm(x))
    v = x.copy()
    if sigma == 0.0:
        v[:] = 0.0
        v[0] = 1.0
        return v, 0.0, 0.0
    alpha = -math.copysign(sigma, x[0])
    v[0] = x[0] - alpha
    v /= v[0]
    beta = 2.0 / float(v @ v)
    return v, beta, alpha


def householder_qr(A: np.ndarray, pivoting: bool = False):
    """Householder QR factorization ``A[:, perm] = Q @ R``.

    Parameters
    ----------
    A : (m, n) array
    pivoting : bool
        Select the remaining column of largest norm at each step
        (Businger-Golub column pivoting), which makes ``R`` rank revealing.

    Returns
    -------
    Q : (m, m) orthogonal matrix
    R : (m, n) upper-triangular matrix
    perm : (n,) integer permutation
    """
    R = np.array(A, dtype=float, copy=True)
    m, n = R.shape
    perm = np.arange(n)
    reflectors = []
    for k in range(min(m, n)):
        if pivoting:
            norms = np.einsum("ij,ij->j", R[k:, k:], R[k:, k:])
            p = k + int(np.argmax(norms))
            if p != k:
                R[:, [k, p]] = R[:, [p, k]]
                perm[[k, p]] = perm[[p, k]]
        v, beta, alpha = _householder_vector(R[k:, k])
        if beta != 0.0:
            R[k:, k:] -= beta * np.outer(v, v @ R[k:, k:])
            R[k + 1:, k] = 0.0
            R[k, k] = alpha
        reflectors.append((k, v, beta))
    Q = np.eye(m)
    for k, v, beta in reversed(reflectors):
        if beta != 0.0:
            Q[k:, k:] -= beta * np.outer(v, v @ Q[k:, k:])
    return Q, R, perm


def solve_upper(R: np.ndarray, B: np.ndarray) -> np.ndarray:
    X = np.zeros_like(B)
    for i in range(R.shape[0] - 1, -1, -1):
        X[i] = (B[i] - R[i, i + 1:] @ X[i + 1:]) / R[i, i]
    return X


def solve_lower(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    X = np.zeros_like(B)
    for i in range(L.shape[0]):
        X[i] = (B[i] - L[i, :i] @ X[:i]) / L[i, i]
    return X


def minnorm_solve(A: np.ndarray, B: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Minimum Frobenius-norm minimizer of ``||A X - B||_F``.

    Uses a complete orthogonal decomposition: column-pivoted QR of ``A``
    truncated at numerical rank ``r`` (``|R_kk| > rtol * |R_00|``), followed by a
    QR factorization of the transposed leading ``r`` rows.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    vector = B.ndim == 1
    if vector:
        B = B[:, None]
    m, n = A.shape
    k = B.shape[1]
    if not np.any(A) or not np.any(B):
        X = np.zeros((n, k))
        return X[:, 0] if vector else X

    Q1, R1, perm = householder_qr(A, pivoting=True)
    diag = np.abs(np.diag(R1))
    r = int(np.sum(diag > rtol * diag[0]))
    C = (Q1.T @ B)[:r]
    # [R11 R12] = T^T Z^T  with Z orthonormal columns (n x r), T upper triangular
    Q2, R2, _ = householder_qr(R1[:r, :].T)
    T = R2[:r, :r]
    Z = Q2[:, :r]
    Y = solve_lower(T.T, C)
    X = np.zeros((n, k))
    X[perm] = Z @ Y
    return X[:, 0] if vector else X


def hessenberg(A: np.ndarray) -> np.ndarray:
    """Upper Hessenberg matrix orthogonally similar to ``A``."""
    H = np.array(A, dtype=float, copy=True)
    n = H.shape[0]
    for k in range(n - 2):
        v, beta, alpha = _householder_vector(H[k + 1:, k])
        if beta == 0.0:
            continue
        H[k + 1:, k:] -= beta * np.outer(v, v @ H[k + 1:, k:])
        H[:, k + 1:] -= beta * np.outer(H[:, k + 1:] @ v, v)
        H[k + 2:, k] = 0.0
        H[k + 1, k] = alpha
    return H


def _balance(A: np.ndarray) -> np.ndarray:
    # Parlett-Reinsch balancing by powers of two (exact in floating point)
    A = A.copy()
    n = A.shape[0]
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = float(np.sum(np.abs(A[:, i]))) - abs(A[i, i])
            r = float(np.sum(np.abs(A[i, :]))) - abs(A[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                A[i, :] /= f
                A[:, i] *= f
    return A


def _hqr(a: np.ndarray, max_iter: int) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix (Francis double-shift QR).

    Follows the classical EISPACK ``hqr`` organisation: deflate at negligible
    subdiagonals, exceptional shifts after 10 and 20 stalled sweeps.
    """
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = float(np.sum(np.abs(np.triu(a, -1))))
    nn = n - 1
    t = 0.0
    total = 0
    while nn >= 0:
        its = 0
        while True:
            # look for a single small subdiagonal element
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = z
                    wi[nn] = -z
                nn -= 2
                break
            if total >= max_iter:
                raise ConvergenceError(nn, total)
            if its in (10, 20):
                t += x
                idx = np.arange(nn + 1)
                a[idx, idx] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            total += 1
            # look for two consecutive small subdiagonal elements
            m = nn - 2
            while True:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u + v == v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            # double-shift QR sweep on rows/columns l..nn
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                if k != nn - 1:
                    rows = a[k:k + 3, k:nn + 1]
                    pv = rows[0] + q * rows[1] + r * rows[2]
                    rows[0] -= pv * x
                    rows[1] -= pv * y
                    rows[2] -= pv * z
                    mmin = min(nn, k + 3)
                    cols = a[l:mmin + 1, k:k + 3]
                    pv = x * cols[:, 0] + y * cols[:, 1] + z * cols[:, 2]
                    cols[:, 0] -= pv
                    cols[:, 1] -= pv * q
                    cols[:, 2] -= pv * r
                else:
                    rows = a[k:k + 2, k:nn + 1]
                    pv = rows[0] + q * rows[1]
                    rows[0] -= pv * x
                    rows[1] -= pv * y
                    mmin = min(nn, k + 3)
                    cols = a[l:mmin + 1, k:k + 2]
                    pv = x * cols[:, 0] + y * cols[:, 1]
                    cols[:, 0] -= pv
                    cols[:, 1] -= pv * q
            if l >= nn - 1:
                break
    return wr + 1j * wi


def eig_general(A: np.ndarray, max_iter: int | None = None) -> np.ndarray:
    """All eigenvalues of a real square matrix, as a complex array.

    The matrix is balanced, reduced to Hessenberg form, and iterated with
    implicitly double-shifted QR until the quasi-triangular (real Schur)
    form is reached; each 1x1 or 2x2 diagonal block yields eigenvalues.
    ``max_iter`` defaults to ``100 * n`` QR sweeps in total.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise LinAlgError("eig_general expects a square matrix")
    if not np.all(np.isfinite(A)):
        raise LinAlgError("eig_general expects finite entries")
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return A[0, :1].astype(complex)
    H = hessenberg(_balance(A))
    return _hqr(H, 100 * n if max_iter is None else max_iter)


def w_orthonormal_complement(V: np.ndarray, w: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Basis ``Z`` of the ``W``-orthogonal complement of ``range(V)``.

    ``w`` holds the diagonal of ``W``. The result satisfies ``V.T W Z = 0``
    and ``Z.T W Z = I``.
    """
    V = np.asarray(V, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.ndim == 2:
        w = np.diag(w)
    N, NP = V.shape
    if np.any(w <= 0.0):
        raise IndefiniteNormError("indefinite norm: W-orthonormal complement needs positive weights")
    G = V.T @ (w[:, None] * V)
    if np.max(np.abs(G - np.eye(NP))) > tol * max(1.0, N):
        raise LinAlgError("V is not W-orthonormal")
    if N == NP:
        return np.zeros((N, 0))
    sw = np.sqrt(w)
    Q, _, _ = householder_qr(sw[:, None] * V)
    return Q[:, NP:] / sw[:, None]


def max_symmetric_eig(A: np.ndarray) -> float:
    """Largest eigenvalue of the symmetric part ``(A + A.T) / 2``."""
    A = np.asarray(A, dtype=float)
    lam = eig_general(0.5 * (A + A.T))
    return float(np.max(lam.real))
