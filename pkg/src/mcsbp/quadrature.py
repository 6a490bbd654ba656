"""Quadrature rules on the reference triangle (-1,-1), (1,-1), (-1,1)."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TriQuadrature",
    "Edge",
    "FaceSet",
    "gauss_legendre",
    "collapsed_tri_rule",
    "tri_edge_rules",
    "liu_4c_rule",
    "triangle_moment",
    "segment_moment",
    "max_exact_degree",
    "max_exact_degree_edge",
]

# (start, end) of each edge in the order bottom, left, hypotenuse; nodes run start -> end
EDGE_ENDPOINTS = (
    ((-1.0, -1.0), (1.0, -1.0)),
    ((-1.0, -1.0), (-1.0, 1.0)),
    ((1.0, -1.0), (-1.0, 1.0)),
)
EDGE_NORMALS = ((0.0, -1.0), (-1.0, 0.0), (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)))
EDGE_NAMES = ("bottom", "left", "hypotenuse")


@dataclass(frozen=True)
class TriQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    verified_degree: int
    name: str = ""
    # 1D tensor data for collapsed rules (None for other rules)
    tensor_nodes: np.ndarray | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.weights.size

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.weights > 0.0))

    @property
    def is_collapsed(self) -> bool:
        return self.tensor_nodes is not None


@dataclass(frozen=True)
class Edge:
    name: str
    nodes: np.ndarray
    weights: np.ndarray
    normal: np.ndarray
    params: np.ndarray
    start: np.ndarray
    end: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))


@dataclass(frozen=True)
class FaceSet:
    edges: tuple[Edge, Edge, Edge]

    @property
    def nodes(self) -> np.ndarray:
        return np.vstack([e.nodes for e in self.edges])

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([e.weights for e in self.edges])

    @property
    def normals(self) -> np.ndarray:
        """Per-node outward unit normals, shape (M, 2)."""
        return np.vstack([np.tile(e.normal, (e.weights.size, 1)) for e in self.edges])

    @property
    def M(self) -> int:
        return sum(e.weights.size for e in self.edges)

    def edge_slice(self, k: int) -> slice:
        start = sum(e.weights.size for e in self.edges[:k])
        return slice(start, start + self.edges[k].weights.size)


def gauss_legendre(n: int, tol: float = 1e-15, max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Legendre-Gauss nodes (ascending) and weights on [-1, 1] by Newton iteration."""
    if n < 1:
        raise ValueError("gauss_legendre needs n >= 1")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(max_iter):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for m in range(2, n + 1):
            p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) <= tol:
            break
    # final derivative at converged nodes
    p0 = np.ones_like(x)
    p1 = x.copy()
    for m in range(2, n + 1):
        p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


def _require_even(Q: int) -> None:
    if Q < 2 or Q % 2:
        raise ValueError(f"quadrature parameter Q must be even and >= 2, got {Q}")


def collapsed_tri_rule(Q: int) -> TriQuadrature:
    """Tensor Legendre-Gauss rule with Q/2+1 points per direction, collapsed onto the triangle.

    Node ``j * n + i`` sits at ``xi1 = g_i, xi2 = g_j`` (rows of constant xi2).
    Exact for total degree Q in physical coordinates (checked at construction
    up to degree 30, the monomial checker's limit).
    """
    _require_even(Q)
    n = Q // 2 + 1
    g, wg = gauss_legendre(n)
    xi1, xi2 = np.meshgrid(g, g, indexing="xy")
    w1, w2 = np.meshgrid(wg, wg, indexing="xy")
    xi1, xi2, w1, w2 = (a.ravel() for a in (xi1, xi2, w1, w2))
    x1 = 0.5 * (1.0 + xi1) * (1.0 - xi2) - 1.0
    x2 = xi2
    w = w1 * w2 * 0.5 * (1.0 - xi2)
    rule = TriQuadrature(np.column_stack([x1, x2]), w, Q, name=f"collapsed-Q{Q}", tensor_nodes=g)
    check = min(Q, 30)
    achieved = max_exact_degree(rule, check)
    if achieved < check:
        raise ArithmeticError(f"collapsed rule Q={Q} only exact to degree {achieved}")
    return rule


def tri_edge_rules(Q: int) -> FaceSet:
    """Q/2+1 point Legendre-Gauss rule on each edge (bottom, left, hypotenuse)."""
    _require_even(Q)
    return edge_rules_from_points(Q // 2 + 1)


def edge_rules_from_points(n: int) -> FaceSet:
    g, wg = gauss_legendre(n)
    edges = []
    for name, (s, e), nrm in zip(EDGE_NAMES, EDGE_ENDPOINTS, EDGE_NORMALS):
        s, e = np.array(s), np.array(e)
        pts = 0.5 * (1.0 - g)[:, None] * s + 0.5 * (1.0 + g)[:, None] * e
        if name == "bottom":
            pts[:, 1] = -1.0
        elif name == "left":
            pts[:, 0] = -1.0
        else:
            pts[:, 0] = -pts[:, 1]
        half = 0.5 * float(np.linalg.norm(e - s))
        edges.append(Edge(name, pts, wg * half, np.array(nrm), g.copy(), s, e))
    return FaceSet(tuple(edges))


# Liu & Vinokur (1998), formula 4c: vertices, the two Gauss points on each edge,
# and the centroid. Area-normalized weights -1/60, 1/10, 9/20.
_LIU4C_EDGE = 0.5 - math.sqrt(3.0) / 6.0


def liu_4c_rule() -> TriQuadrature:
    """Ten-point, degree-4 rule with negative vertex weights (-1/30 on the area-2 triangle)."""
    verts = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    bary = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    weights = [-1.0 / 60.0] * 3
    a = _LIU4C_EDGE
    for i, j in ((0, 1), (1, 2), (2, 0)):
        for t in (a, 1.0 - a):
            lam = [0.0, 0.0, 0.0]
            lam[i], lam[j] = t, 1.0 - t
            bary.append(tuple(lam))
            weights.append(1.0 / 10.0)
    bary.append((1 / 3, 1 / 3, 1 / 3))
    weights.append(9.0 / 20.0)
    nodes = np.array(bary) @ verts
    w = 2.0 * np.array(weights)
    rule = TriQuadrature(nodes, w, 4, name="liu-4c")
    achieved = max_exact_degree(rule, 4)
    if achieved != 4:
        raise ArithmeticError(f"liu 4c transcription only exact to degree {achieved}")
    return rule


def triangle_moment(a: int, b: int) -> float:
    """Exact integral of ``x1**a * x2**b`` over the reference triangle.

    With ``u = 1 + x1`` and ``v = 1 + x2`` the domain becomes the simplex
    ``u, v >= 0, u + v <= 2``; expanding binomially uses the Dirichlet moments
    ``int u^p v^q = 2^(p+q+2) p! q! / (p+q+2)!``.
    """
    total = Fraction(0)
    for p in range(a + 1):
        for q in range(b + 1):
            coef = math.comb(a, p) * math.comb(b, q) * (-1) ** (a - p + b - q)
            total += coef * Fraction(2 ** (p + q + 2) * math.factorial(p) * math.factorial(q), math.factorial(p + q + 2))
    return float(total)


def segment_moment(k: int) -> float:
    """Exact integral of ``t**k`` over [-1, 1]."""
    return 0.0 if k % 2 else 2.0 / (k + 1)


def max_exact_degree(rule: TriQuadrature, cap: int = 30, rtol: float = 1e-12) -> int:
    """Largest d <= cap such that all monomials of total degree <= d integrate exactly."""
    if cap > 30:
        raise ValueError("cap must be <= 30")
    x1, x2 = rule.nodes[:, 0], rule.nodes[:, 1]
    best = -1
    for d in range(cap + 1):
        for a in range(d + 1):
            b = d - a
            exact = triangle_moment(a, b)
            approx = float(rule.weights @ (x1**a * x2**b))
            if abs(approx - exact) > rtol * max(1.0, abs(exact), float(np.abs(rule.weights) @ np.abs(x1**a * x2**b))):
                return best
        best = d
    return best


def max_exact_degree_edge(nodes_1d: np.ndarray, weights_1d: np.ndarray, cap: int = 30, rtol: float = 1e-12) -> int:
    """Exactness degree of a 1D rule on [-1, 1]."""
    best = -1
    for d in range(cap + 1):
        if abs(float(weights_1d @ nodes_1d**d) - segment_moment(d)) > rtol * 2.0:
            return best
        best = d
    return best
