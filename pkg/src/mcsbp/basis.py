"""Orthonormal Proriol-Koornwinder-Dubiner (PKD) basis on the reference triangle.

The reference triangle has vertices (-1, -1), (1, -1), (-1, 1) and area 2.
Basis functions are indexed by pairs ``(i, j)`` with ``i + j <= P``, ordered
by total degree and then by ascending ``j`` inside a degree, e.g. for P = 2::

    (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)

Evaluation uses the collapsed coordinates
``a = 2 (1 + x1) / (1 - x2) - 1``, ``b = x2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "PolyBasis",
    "VandermondeSet",
    "basis_dim",
    "index_pairs",
    "jacobi",
    "grad_jacobi",
    "eval_vandermonde",
    "eval_grad_vandermonde",
    "eval_on_curve",
    "monomial_vandermonde",
]


class DomainError(ValueError):
    pass


def basis_dim(P: int) -> int:
    if P < 0:
        raise ValueError("degree must be non-negative")
    return (P + 1) * (P + 2) // 2


def index_pairs(P: int) -> list[tuple[int, int]]:
    return [(d - j, j) for d in range(P + 1) for j in range(d + 1)]


@dataclass(frozen=True)
class PolyBasis:
    P: int

    @property
    def dim(self) -> int:
        return basis_dim(self.P)

    @property
    def index_pairs(self) -> list[tuple[int, int]]:
        return index_pairs(self.P)


@dataclass(frozen=True)
class VandermondeSet:
    points: np.ndarray
    V: np.ndarray
    V_x1: np.ndarray | None = None
    V_x2: np.ndarray | None = None


def jacobi(x: np.ndarray, alpha: float, beta: float, n: int) -> np.ndarray:
    """Jacobi polynomial of degree ``n`` normalized to unit weighted L2 norm on [-1, 1]."""
    x = np.asarray(x, dtype=float)
    from math import gamma, sqrt

    g0 = 2 ** (alpha + beta + 1) / (alpha + beta + 1) * gamma(alpha + 1) * gamma(beta + 1) / gamma(alpha + beta + 1)
    p_prev = np.full_like(x, 1.0 / sqrt(g0))
    if n == 0:
        return p_prev
    g1 = (alpha + 1) * (beta + 1) / (alpha + beta + 3) * g0
    p = ((alpha + beta + 2) * x / 2 + (alpha - beta) / 2) / sqrt(g1)
    if n == 1:
        return p
    a_old = 2 / (2 + alpha + beta) * sqrt((alpha + 1) * (beta + 1) / (alpha + beta + 3))
    for i in range(1, n):
        h1 = 2 * i + alpha + beta
        a_new = 2 / (h1 + 2) * sqrt(
            (i + 1) * (i + 1 + alpha + beta) * (i + 1 + alpha) * (i + 1 + beta) / (h1 + 1) / (h1 + 3)
        )
        b_new = -(alpha * alpha - beta * beta) / h1 / (h1 + 2)
        p_prev, p = p, (-a_old * p_prev + (x - b_new) * p) / a_new
        a_old = a_new
    return p


def grad_jacobi(x: np.ndarray, alpha: float, beta: float, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.zeros_like(x)
    return np.sqrt(n * (n + alpha + beta + 1)) * jacobi(x, alpha + 1, beta + 1, n - 1)


def _check_points(pts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != 2:
        raise DomainError("points must have shape (N, 2)")
    x1, x2 = pts[:, 0], pts[:, 1]
    outside = (x1 < -1 - tol) | (x2 < -1 - tol) | (x1 + x2 > tol)
    if np.any(outside):
        bad = pts[np.argmax(outside)]
        raise DomainError(f"point {tuple(bad)} lies outside the reference triangle")
    return pts


def _collapse(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x1, x2 = pts[:, 0], pts[:, 1]
    denom = 1.0 - x2
    top = np.abs(denom) < 1e-14
    # at the collapsed vertex every (1 - b)^i factor with i > 0 vanishes; a is arbitrary
    a = np.where(top, -1.0, 2.0 * (1.0 + x1) / np.where(top, 1.0, denom) - 1.0)
    return a, x2.copy()


def eval_vandermonde(P: int, pts) -> np.ndarray:
    """Orthonormal PKD basis values, shape (N, N_P)."""
    pts = _check_points(pts)
    a, b = _collapse(pts)
    V = np.empty((pts.shape[0], basis_dim(P)))
    for col, (i, j) in enumerate(index_pairs(P)):
        V[:, col] = (
            np.sqrt(2.0) * jacobi(a, 0, 0, i) * jacobi(b, 2 * i + 1, 0, j) * (1.0 - b) ** i
        )
    return V


def eval_grad_vandermonde(P: int, pts) -> VandermondeSet:
    """Basis values and both Cartesian gradients at ``pts``.

    The chain rule through the collapsed coordinates is written so that no
    division by ``1 - b`` remains; the expressions are valid at ``b = 1``.
    """
    pts = _check_points(pts)
    a, b = _collapse(pts)
    NP = basis_dim(P)
    V = np.empty((pts.shape[0], NP))
    Vr = np.empty_like(V)
    Vs = np.empty_like(V)
    half1mb = 0.5 * (1.0 - b)
    for col, (i, j) in enumerate(index_pairs(P)):
        fa = jacobi(a, 0, 0, i)
        dfa = grad_jacobi(a, 0, 0, i)
        gb = jacobi(b, 2 * i + 1, 0, j)
        dgb = grad_jacobi(b, 2 * i + 1, 0, j)
        lower = half1mb ** (i - 1) if i > 0 else np.ones_like(b)
        dr = dfa * gb * (lower if i > 0 else 0.0)
        ds = dfa * gb * 0.5 * (1.0 + a) * (lower if i > 0 else 0.0)
        tmp = dgb * half1mb**i
        if i > 0:
            tmp = tmp - 0.5 * i * gb * lower
        ds = ds + fa * tmp
        scale = 2.0 ** (i + 0.5)
        V[:, col] = scale * fa * gb * half1mb**i
        Vr[:, col] = scale * dr
        Vs[:, col] = scale * ds
    return VandermondeSet(points=pts, V=V, V_x1=Vr, V_x2=Vs)


def eval_on_curve(P: int, params, start, end) -> np.ndarray:
    """Basis values along the segment from ``start`` (param -1) to ``end`` (param +1)."""
    t = np.asarray(params, dtype=float)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    pts = 0.5 * (1.0 - t)[:, None] * start + 0.5 * (1.0 + t)[:, None] * end
    return eval_vandermonde(P, pts)


def monomial_vandermonde(P: int, pts) -> VandermondeSet:
    """Monomials ``x1^p x2^q`` (same index order) and their gradients; a nonorthogonal basis."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x1, x2 = pts[:, 0], pts[:, 1]
    pairs = index_pairs(P)
    V = np.column_stack([x1**p * x2**q for p, q in pairs])
    V1 = np.column_stack([p * x1 ** max(p - 1, 0) * x2**q if p else 0.0 * x1 for p, q in pairs])
    V2 = np.column_stack([q * x1**p * x2 ** max(q - 1, 0) if q else 0.0 * x1 for p, q in pairs])
    return VandermondeSet(points=pts, V=V, V_x1=V1, V_x2=V2)
