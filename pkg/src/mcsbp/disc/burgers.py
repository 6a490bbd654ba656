"""Burgers' equation u_t + (u^2/2)_x1 = 0 on the periodic split-quad mesh."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..mesh import PeriodicTriMesh, build_periodic_mesh, class_operators, neighbor_gather
from ..operators import OperatorSet, build_mc
from ..quadrature import collapsed_tri_rule, tri_edge_rules
from .timestep import lsrk45_integrate

__all__ = [
    "VARIANTS",
    "BurgersScheme",
    "BurgersRun",
    "exact_burgers",
    "build_scheme",
    "burgers_rhs",
    "ec_rhs_hadamard",
    "dg_rhs_from_nodal",
    "project_field",
    "l2_diff",
    "total_entropy",
    "burgers_run",
    "convergence_rates",
]

VARIANTS = ("standard", "ec", "ec-projected")


class RootFindError(ArithmeticError):
    pass


def exact_burgers(x1, t: float, tol: float = 1e-14, max_iter: int = 100) -> np.ndarray:
    """Solution of u_t + u u_x = 0 with u(x, 0) = sin(x): the root of ``G - sin(x1 - t G) = 0``.

    Newton from ``sin(x1)``, safeguarded by the bracket ``[-1, 1]``; for
    ``t <= 1`` the residual is monotone in ``G`` so the bracket always holds
    the unique root.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("exact_burgers requires 0 <= t <= 1")
    x = np.asarray(x1, dtype=float)
    G = np.sin(x)
    if t == 0.0:
        return G
    eps = 1e-12
    lo = np.full_like(x, -1.0 - eps)
    hi = np.full_like(x, 1.0 + eps)
    for _ in range(max_iter):
        s = x - t * G
        f = G - np.sin(s)
        lo = np.where(f < 0, G, lo)
        hi = np.where(f > 0, G, hi)
        if np.all(np.abs(f) <= tol):
            return G
        df = 1.0 + t * np.cos(s)
        step = np.where(df > 1e-300, f / np.where(df > 1e-300, df, 1.0), np.inf)
        Gn = G - step
        bad = ~((Gn > lo) & (Gn < hi)) | ~np.isfinite(Gn)
        Gn = np.where(bad, 0.5 * (lo + hi), Gn)
        G = np.where(np.abs(f) <= tol, G, Gn)
    f = G - np.sin(x - t * G)
    if np.any(np.abs(f) > 1e-13):
        i = int(np.argmax(np.abs(f)))
        raise RootFindError(f"exact_burgers did not converge at x1={x.ravel()[i]!r}, t={t!r}")
    return G


@dataclass(frozen=True)
class BurgersScheme:
    variant: str
    mesh: PeriodicTriMesh
    ref: OperatorSet
    ops: tuple  # physical OperatorSet per congruence class
    gather: np.ndarray  # (K, M) flat neighbour index into face traces

    @property
    def class_index(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.flatnonzero(self.mesh.cls == c) for c in (0, 1))

    @property
    def elem_weights(self) -> np.ndarray:
        """(K, N) physical volume weights ``J_k w``."""
        return np.stack([op.w for op in self.ops])[self.mesh.cls]


def build_scheme(variant: str, P: int, N1D: int, quad_mult: int = 2) -> BurgersScheme:
    """MC operators of degree P with the collapsed rule exact to degree ``quad_mult * P``."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown Burgers variant {variant!r}; expected one of {VARIANTS}")
    Q = quad_mult * P
    ref = build_mc(P, collapsed_tri_rule(Q), tri_edge_rules(Q))
    mesh = build_periodic_mesh(N1D)
    return BurgersScheme(variant, mesh, ref, class_operators(ref, mesh), neighbor_gather(mesh, ref))


def _standard(scheme: BurgersScheme, u: np.ndarray) -> np.ndarray:
    R = scheme.ref.R
    f = 0.5 * u * u
    own = u @ R.T
    plus = own.ravel()[scheme.gather]
    favg = 0.5 * (0.5 * (own + plus)) ** 2
    fown = f @ R.T
    out = np.empty_like(u)
    for c, idx in enumerate(scheme.class_index):
        op = scheme.ops[c]
        n1 = op.nf[:, 0]
        jump = (op.wf * n1) * (favg[idx] - fown[idx])
        out[idx] = -f[idx] @ op.D[0].T - (jump @ R) / op.w
    return out


def _ec(scheme: BurgersScheme, u: np.ndarray) -> np.ndarray:
    # F(a, b) = (a^2 + a b + b^2) / 6 is a sum of separable products, so the
    # Hadamard sums reduce to matrix-vector products
    R = scheme.ref.R
    u2 = u * u
    plus = (u @ R.T).ravel()[scheme.gather]
    plus2 = (u2 @ R.T).ravel()[scheme.gather]
    out = np.empty_like(u)
    for c, idx in enumerate(scheme.class_index):
        op = scheme.ops[c]
        S = 0.5 * (op.Qd[0] - op.Qd[0].T)
        g = op.wf * op.nf[:, 0]
        C1 = R.T @ (g * (R @ np.ones(op.N)))
        uk, uk2 = u[idx], u2[idx]
        vol = (uk2 * (S @ np.ones(op.N)) + uk * (uk @ S.T) + uk2 @ S.T) / 3.0
        face = (uk2 * C1 + uk * ((g * plus[idx]) @ R) + (g * plus2[idx]) @ R) / 6.0
        out[idx] = -(vol + face) / op.w
    return out


def ec_rhs_hadamard(scheme: BurgersScheme, u: np.ndarray) -> np.ndarray:
    """Entropy-conservative RHS assembled from explicit Hadamard products (slow reference).

    ``W du_k/dt = -2 (S o F(u_k, u_k)) 1 - sum_faces (R_k^T B N R_nbr o F(u_k, u_nbr)) 1``
    """
    R = scheme.ref.R
    M = scheme.ref.M
    F = lambda a, b: (a[:, None] ** 2 + a[:, None] * b[None, :] + b[None, :] ** 2) / 6.0
    out = np.empty_like(u)
    for k in range(scheme.mesh.K):
        op = scheme.ops[scheme.mesh.cls[k]]
        S = 0.5 * (op.Qd[0] - op.Qd[0].T)
        total = 2.0 * (S * F(u[k], u[k])).sum(axis=1)
        g = op.wf * op.nf[:, 0]
        src = scheme.gather[k]
        for e in range(3):
            sl = op.edge_slice(e)
            nbr = int(src[sl.start] // M)
            Rn = R[src[sl] % M]
            C = R[sl].T @ (g[sl][:, None] * Rn)
            total += (C * F(u[k], u[nbr])).sum(axis=1)
        out[k] = -total / op.w
    return out


def burgers_rhs(scheme: BurgersScheme, u: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Nodal semi-discrete rate ``du/dt`` for the scheme's variant; ``u`` has shape (K, N)."""
    if scheme.variant == "standard":
        return _standard(scheme, u)
    rhs = _ec(scheme, u)
    if scheme.variant == "ec-projected":
        rhs = project_field(rhs, scheme.ref)
    return rhs


def project_field(u: np.ndarray, opset: OperatorSet) -> np.ndarray:
    """Per-element L2 projection ``V V^T W u_k`` (rows of ``u`` are elements)."""
    if opset.kind != "MC":
        raise ValueError("project_field needs an MC operator set")
    return ((u * opset.w) @ opset.V) @ opset.V.T


def dg_rhs_from_nodal(rhs, opset: OperatorSet):
    """Modal RHS ``u_tilde -> V^T W rhs(V u_tilde)`` for fields stored as (K, N_P) rows."""
    if opset.kind != "MC":
        raise ValueError("dg_rhs_from_nodal needs an MC operator set")
    V, w = opset.V, opset.w

    def modal(ut: np.ndarray, t: float) -> np.ndarray:
        return (rhs(ut @ V.T, t) * w) @ V

    return modal


def l2_diff(a: np.ndarray, b: np.ndarray, opset: OperatorSet, J=1.0) -> float:
    """``sqrt(sum_k J_k e_k^T |W| e_k)`` with ``e = a - b``.

    ``|W|`` equals ``W`` for positive rules; for rules with negative weights
    it keeps the quantity a norm.
    """
    e = np.atleast_2d(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    J = np.broadcast_to(np.asarray(J, dtype=float), (e.shape[0],))
    return float(math.sqrt(np.sum(J * ((e * e) @ np.abs(opset.w)))))


def total_entropy(scheme: BurgersScheme, u: np.ndarray) -> float:
    """``sum_k u_k^T W J_k u_k``."""
    return float(np.sum(scheme.elem_weights * u * u))


@dataclass(frozen=True)
class BurgersRun:
    variant: str
    P: int
    N1D: int
    quad_mult: int
    dt: float
    steps: int
    error: float  # MC solution vs exact
    dg_diff: float  # MC solution vs lifted modal DG solution
    entropy_change: float


def burgers_run(variant: str, P: int, N1D: int, quad_mult: int = 2, T: float = 1.0, cfl: float = 0.5,
                with_dg: bool = True) -> BurgersRun:
    """Integrate the MC scheme (and its modal DG counterpart) to ``T`` from projected sin(x1) data."""
    scheme = build_scheme(variant, P, N1D, quad_mult)
    ref, mesh = scheme.ref, scheme.mesh
    X = mesh.map_points(ref.nodes)
    u0 = project_field(np.sin(X[..., 0]), ref)
    gmax = float(np.max(np.abs(u0)))
    dt = cfl * mesh.h / ((P + 1) ** 2 * gmax / 2.0)
    rhs = lambda u, t: burgers_rhs(scheme, u, t)
    u, steps = lsrk45_integrate(rhs, u0, dt, T)
    J = mesh.J
    err = l2_diff(u, exact_burgers(X[..., 0], T), ref, J)
    diff = math.nan
    if with_dg:
        ut0 = (u0 * ref.w) @ ref.V
        ut, _ = lsrk45_integrate(dg_rhs_from_nodal(rhs, ref), ut0, dt, T)
        diff = l2_diff(u, ut @ ref.V.T, ref, J)
    dS = total_entropy(scheme, u) - total_entropy(scheme, u0)
    return BurgersRun(variant, P, N1D, quad_mult, dt, steps, err, diff, dS)


def convergence_rates(h, errors) -> list[float]:
    """Rates ``log(e_i / e_{i+1}) / log(h_i / h_{i+1})`` between consecutive resolutions."""
    return [
        math.log(errors[i] / errors[i + 1]) / math.log(h[i] / h[i + 1]) for i in range(len(errors) - 1)
    ]
