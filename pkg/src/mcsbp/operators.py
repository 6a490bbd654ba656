"""Element derivative operators on the triangle.

Two families are built on the same volume/face quadrature:

* modal collocation (MC): ``D = V_x V^T W`` with the orthonormal PKD basis,
  or ``D = Vhat_x M^{-1} Vhat^T W`` for a nonorthogonal basis;
* min-norm SBP: a sparse boundary operator from 1D extrapolation along the
  collinear node lines of the collapsed grid, and the minimum Frobenius-norm
  skew-symmetric part satisfying the accuracy conditions.

All matrices that carry a direction index are stored stacked as
``(2, ...)`` arrays, index 0 for ``x1`` and 1 for ``x2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import densela
from .basis import eval_grad_vandermonde
from .quadrature import FaceSet, TriQuadrature, max_exact_degree

__all__ = [
    "OperatorError",
    "OperatorSet",
    "VerificationReport",
    "default_tol",
    "build_mc",
    "build_mc_general",
    "nodal_to_mc",
    "collinear_extrapolation",
    "minnorm_skew",
    "build_sbp_minnorm",
    "build_lps",
    "build_upwind",
    "nullspace",
    "verify_operator",
    "compatibility_residual",
    "export_json",
    "import_json",
]


class OperatorError(ValueError):
    pass


@dataclass(frozen=True)
class OperatorSet:
    kind: str  # "MC" or "SBP-minnorm"
    P: int
    w: np.ndarray  # volume weights (diagonal of W)
    V: np.ndarray  # (N, N_P)
    Vx: np.ndarray  # (2, N, N_P)
    D: np.ndarray  # (2, N, N)
    Qd: np.ndarray  # (2, N, N), Qd = W D
    E: np.ndarray  # (2, N, N), E = Qd + Qd^T
    R: np.ndarray  # (M, N) face reconstruction
    Vf: np.ndarray  # (M, N_P) basis at face nodes
    wf: np.ndarray  # (M,) face weights
    nf: np.ndarray  # (M, 2) outward unit normals
    nodes: np.ndarray  # (N, 2)
    face_nodes: np.ndarray  # (M, 2)
    edge_sizes: tuple[int, ...] = (0, 0, 0)
    Q: int | None = None  # quadrature parameter for collapsed rules
    quad_name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def N(self) -> int:
        return self.w.size

    @property
    def NP(self) -> int:
        return self.V.shape[1]

    @property
    def M(self) -> int:
        return self.wf.size

    @property
    def W(self) -> np.ndarray:
        return np.diag(self.w)

    @property
    def projector(self) -> np.ndarray:
        """Nodal L2 projection onto the polynomial space, ``V V^T W`` (MC) or its mass-matrix form."""
        G = self.V.T @ (self.w[:, None] * self.V)
        return self.V @ np.linalg.solve(G, self.V.T * self.w)

    def edge_slice(self, k: int) -> slice:
        start = sum(self.edge_sizes[:k])
        return slice(start, start + self.edge_sizes[k])


@dataclass(frozen=True)
class VerificationReport:
    accuracy_residual: float
    sbp_residual: float
    boundary_accuracy_residual: float
    compatibility_residual: float
    nullspace_dim: int
    tol: float
    positive_norm: bool

    @property
    def passed(self) -> bool:
        return max(
            self.accuracy_residual,
            self.sbp_residual,
            self.boundary_accuracy_residual,
            self.compatibility_residual,
        ) <= self.tol

    def as_dict(self) -> dict:
        return {
            "accuracy_residual": self.accuracy_residual,
            "sbp_residual": self.sbp_residual,
            "boundary_accuracy_residual": self.boundary_accuracy_residual,
            "compatibility_residual": self.compatibility_residual,
            "nullspace_dim": self.nullspace_dim,
            "tol": self.tol,
            "positive_norm": self.positive_norm,
            "passed": self.passed,
        }


def default_tol(w: np.ndarray, Vx: np.ndarray, base: float = 1e-10) -> float:
    return base * max(1.0, float(np.max(np.abs(w))) * float(np.max(np.abs(Vx))))


def _boundary_matrix(Vf, wf, nf, d):
    return Vf.T @ ((wf * nf[:, d])[:, None] * Vf)


def compatibility_residual(V, Vx, w, Vf, wf, nf) -> float:
    """Max-norm violation of ``V^T W V_x + V_x^T W V = V_f^T W_f N V_f`` over both directions."""
    res = 0.0
    for d in range(2):
        lhs = V.T @ (w[:, None] * Vx[d])
        lhs = lhs + lhs.T
        res = max(res, float(np.max(np.abs(lhs - _boundary_matrix(Vf, wf, nf, d)))))
    return res


def _face_data(faces: FaceSet):
    return faces.nodes, faces.weights, faces.normals, tuple(e.weights.size for e in faces.edges)


def _check_exactness(P: int, vol: TriQuadrature) -> None:
    need = 2 * P
    achieved = max_exact_degree(vol, min(need, 30))
    if achieved < min(need, 30):
        raise OperatorError(
            f"volume quadrature '{vol.name}' is exact to degree {achieved}; degree {need} required for P={P}"
        )


def build_mc(P: int, vol: TriQuadrature, faces: FaceSet, tol: float | None = None) -> OperatorSet:
    """Degree-P modal-collocation operators on the reference triangle.

    Negative volume weights are accepted; only 2P exactness and face
    compatibility are required.
    """
    _check_exactness(P, vol)
    w = vol.weights
    vs = eval_grad_vandermonde(P, vol.nodes)
    V, Vx = vs.V, np.stack([vs.V_x1, vs.V_x2])
    fx, wf, nf, sizes = _face_data(faces)
    Vf = eval_grad_vandermonde(P, fx).V
    tol = default_tol(w, Vx) if tol is None else tol

    compat = compatibility_residual(V, Vx, w, Vf, wf, nf)
    if compat > tol:
        raise OperatorError(f"face quadrature is not degree-{P} compatible (residual {compat:.3e})")

    VtW = V.T * w
    D = np.stack([Vx[d] @ VtW for d in range(2)])
    R = Vf @ VtW
    Qd = w[None, :, None] * D
    E = Qd + Qd.transpose(0, 2, 1)
    for d in range(2):
        lemma = R.T @ ((wf * nf[:, d])[:, None] * R)
        if np.max(np.abs(lemma - E[d])) > tol:
            raise OperatorError("boundary operator does not factor through the face projection")
    return OperatorSet(
        "MC", P, w, V, Vx, D, Qd, E, R, Vf, wf, nf, vol.nodes, fx, sizes,
        Q=vol.verified_degree if vol.is_collapsed else None, quad_name=vol.name,
    )


def build_mc_general(
    P: int,
    Vhat: np.ndarray,
    Vhat_x: np.ndarray,
    Vhat_f: np.ndarray,
    vol: TriQuadrature,
    faces: FaceSet,
) -> OperatorSet:
    """MC operators from an arbitrary (nonorthogonal) basis through the mass matrix.

    ``M = Vhat^T W Vhat = L L^T``; the implicit orthonormal basis is
    ``V = Vhat L^{-T}``, so ``D = Vhat_x M^{-1} Vhat^T W = V_x V^T W``.
    """
    w = vol.weights
    Mmat = Vhat.T @ (w[:, None] * Vhat)
    try:
        L = densela.cholesky(0.5 * (Mmat + Mmat.T))
    except densela.LinAlgError as exc:
        raise OperatorError(f"mass matrix is singular or indefinite: {exc}") from exc
    Linv = densela.solve_lower(L, np.eye(L.shape[0]))
    V = Vhat @ Linv.T
    Vx = np.stack([Vhat_x[d] @ Linv.T for d in range(2)])
    Vf = Vhat_f @ Linv.T
    fx, wf, nf, sizes = _face_data(faces)
    VtW = V.T * w
    D = np.stack([Vx[d] @ VtW for d in range(2)])
    R = Vf @ VtW
    Qd = w[None, :, None] * D
    E = Qd + Qd.transpose(0, 2, 1)
    return OperatorSet(
        "MC", P, w, V, Vx, D, Qd, E, R, Vf, wf, nf, vol.nodes, fx, sizes,
        Q=vol.verified_degree if vol.is_collapsed else None, quad_name=vol.name,
        meta={"construction": "mass-matrix"},
    )


def nodal_to_mc(D_nodal: np.ndarray, V: np.ndarray, w: np.ndarray, Vx: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Project a degree-P exact nodal operator to the MC operator: ``Pi D Pi`` with ``Pi = V V^T W``."""
    res = float(np.max(np.abs(D_nodal @ V - Vx)))
    if res > tol * max(1.0, float(np.max(np.abs(Vx)))):
        raise OperatorError(f"nodal operator is not degree-P exact (residual {res:.3e})")
    Pi = V @ (V.T * w)
    return Pi @ D_nodal @ Pi


def _lagrange_weights(nodes: np.ndarray, x0: float) -> np.ndarray:
    n = nodes.size
    ell = np.ones(n)
    for j in range(n):
        for k in range(n):
            if k != j:
                ell[j] *= (x0 - nodes[k]) / (nodes[j] - nodes[k])
    return ell


def collinear_extrapolation(vol: TriQuadrature, faces: FaceSet) -> np.ndarray:
    """Sparse face reconstruction ``R`` (M x N) for a collapsed rule.

    Left-edge and hypotenuse nodes are reached along rows of constant xi2,
    bottom-edge nodes along lines of constant xi1 (through the top vertex).
    Each face value uses the Q/2+1 volume nodes of one line.
    """
    if not vol.is_collapsed:
        raise OperatorError("collinear extrapolation needs a collapsed tensor-product rule")
    g = vol.tensor_nodes
    n = g.size
    if any(e.weights.size != n for e in faces.edges):
        raise OperatorError("face rules must use Q/2+1 nodes per edge")
    R = np.zeros((faces.M, vol.N))
    row = 0
    to_bottom = _lagrange_weights(g, -1.0)
    to_left = _lagrange_weights(g, -1.0)
    to_hyp = _lagrange_weights(g, 1.0)
    for edge in faces.edges:
        for m in range(n):
            if edge.name == "bottom":
                # xi1 = g[m]; vary xi2
                cols = np.arange(n) * n + m
                R[row, cols] = to_bottom
                target = (g[m], -1.0)
            elif edge.name == "left":
                cols = m * n + np.arange(n)
                R[row, cols] = to_left
                target = (-1.0, g[m])
            else:
                cols = m * n + np.arange(n)
                R[row, cols] = to_hyp
                target = (-g[m], g[m])
            if np.max(np.abs(np.asarray(target) - edge.nodes[m])) > 1e-13:
                raise OperatorError("face nodes do not lie on the collinear volume lines")
            row += 1
    return R


def minnorm_skew(V: np.ndarray, B: np.ndarray, method: str = "projection") -> np.ndarray:
    """Minimum Frobenius-norm skew-symmetric ``S`` with ``S V = B``.

    ``method="projection"`` uses the closed form obtained from an orthonormal
    basis ``U`` of ``range(V)``: with ``C = B T^{-1}`` (``V = U T``) the
    solution is ``S = (I - U U^T) C U^T - U C^T (I - U U^T) + U K U^T`` where
    ``K`` is the skew part of ``U^T C``. ``method="lstsq"`` assembles the
    linear system for the strictly-lower entries and calls
    :func:`densela.minnorm_solve`; it is O(N^4) memory and meant for small N.
    """
    N, NP = V.shape
    if method == "projection":
        Qfull, Rfull, _ = densela.householder_qr(V)
        U = Qfull[:, :NP]
        T = Rfull[:NP, :NP]
        C = densela.solve_lower(T.T, B.T).T
        UtC = U.T @ C
        K = 0.5 * (UtC - UtC.T)
        Cperp = C - U @ UtC
        S = Cperp @ U.T - U @ Cperp.T + U @ K @ U.T
        return 0.5 * (S - S.T)
    if method == "lstsq":
        p, q = np.tril_indices(N, -1)
        nunk = p.size
        A = np.zeros((N * NP, nunk))
        cols = np.arange(nunk)
        for k in range(NP):
            # S[p, q] = s contributes V[q, k] s to row (p, k); S[q, p] = -s gives -V[p, k] s to row (q, k)
            A[p * NP + k, cols] += V[q, k]
            A[q * NP + k, cols] -= V[p, k]
        s = densela.minnorm_solve(A, B.reshape(-1))
        S = np.zeros((N, N))
        S[p, q] = s
        S[q, p] = -s
        return S
    raise ValueError(f"unknown method {method!r}")


def build_sbp_minnorm(P: int, vol: TriQuadrature, faces: FaceSet, method: str = "projection") -> OperatorSet:
    """Min-norm diagonal-norm SBP operators on a collapsed tensor-product rule."""
    if not vol.is_collapsed:
        raise OperatorError("min-norm SBP construction requires a collapsed tensor-product quadrature")
    if vol.verified_degree < 2 * P:
        raise OperatorError(f"collapsed rule Q={vol.verified_degree} is below 2P={2 * P}")
    w = vol.weights
    vs = eval_grad_vandermonde(P, vol.nodes)
    V, Vx = vs.V, np.stack([vs.V_x1, vs.V_x2])
    fx, wf, nf, sizes = _face_data(faces)
    Vf = eval_grad_vandermonde(P, fx).V
    R = collinear_extrapolation(vol, faces)
    E = np.stack([R.T @ ((wf * nf[:, d])[:, None] * R) for d in range(2)])
    S = np.stack([minnorm_skew(V, w[:, None] * Vx[d] - 0.5 * E[d] @ V, method) for d in range(2)])
    Qd = S + 0.5 * E
    D = Qd / w[None, :, None]
    return OperatorSet(
        "SBP-minnorm", P, w, V, Vx, D, Qd, E, R, Vf, wf, nf, vol.nodes, fx, sizes,
        Q=vol.verified_degree, quad_name=vol.name, meta={"skew_method": method},
    )


def build_lps(V: np.ndarray, w: np.ndarray, lam: np.ndarray | None = None, tol: float = 1e-12) -> np.ndarray:
    """Local-projection stabilization ``(I - V V^T W)^T W Lam (I - V V^T W)``.

    ``lam`` is the diagonal of a positive scaling; ``None`` means identity,
    in which case the operator reduces to ``W (I - V V^T W)``.
    """
    N, NP = V.shape
    G = V.T @ (w[:, None] * V)
    if np.max(np.abs(G - np.eye(NP))) > tol * max(1.0, N):
        raise OperatorError("V is not W-orthonormal")
    scale = w if lam is None else w * np.asarray(lam, dtype=float)
    if lam is not None and np.any(np.asarray(lam) <= 0.0):
        raise OperatorError("LPS scaling must be positive")
    Pi = np.eye(N) - V @ (V.T * w)
    Pm = Pi.T @ (scale[:, None] * Pi)
    return 0.5 * (Pm + Pm.T)


def build_upwind(opset: OperatorSet, lps: np.ndarray, d: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Upwind pair ``D+- = W^{-1} (Q_d +- P)``."""
    Dp = (opset.Qd[d] + lps) / opset.w[:, None]
    Dm = (opset.Qd[d] - lps) / opset.w[:, None]
    return Dp, Dm


def nullspace(opset: OperatorSet) -> np.ndarray:
    """W-orthonormal basis ``Z`` of the non-polynomial nodal modes; ``D Z = 0`` for MC."""
    if opset.kind != "MC":
        raise OperatorError("nullspace basis is defined for MC operators")
    return densela.w_orthonormal_complement(opset.V, opset.w)


def _rank(A: np.ndarray, rtol: float = 1e-10) -> int:
    _, R, _ = densela.householder_qr(A, pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    return int(np.sum(diag > rtol * diag[0]))


def verify_operator(opset: OperatorSet, tol: float | None = None) -> VerificationReport:
    """Max-norm residuals of the SBP definition and face compatibility. Never raises."""
    V, Vx, w = opset.V, opset.Vx, opset.w
    tol = default_tol(w, Vx) if tol is None else tol
    acc = sbp = bnd = 0.0
    for d in range(2):
        acc = max(acc, float(np.max(np.abs(opset.D[d] @ V - Vx[d]))))
        sbp = max(
            sbp,
            float(np.max(np.abs(opset.Qd[d] - w[:, None] * opset.D[d]))),
            float(np.max(np.abs(opset.Qd[d] + opset.Qd[d].T - opset.E[d]))),
        )
        bnd = max(bnd, float(np.max(np.abs(V.T @ opset.E[d] @ V - _boundary_matrix(opset.Vf, opset.wf, opset.nf, d)))))
    compat = compatibility_residual(V, Vx, w, opset.Vf, opset.wf, opset.nf)
    nulldim = opset.N - _rank(np.vstack([opset.D[0], opset.D[1]]).T)
    return VerificationReport(acc, sbp, bnd, compat, nulldim, tol, bool(np.all(w > 0)))


# -- JSON bundle ---------------------------------------------------------------

_MATRICES = {
    "W": lambda o: o.w[None, :],
    "V": lambda o: o.V,
    "V_x1": lambda o: o.Vx[0],
    "V_x2": lambda o: o.Vx[1],
    "D_x1": lambda o: o.D[0],
    "D_x2": lambda o: o.D[1],
    "Q_x1": lambda o: o.Qd[0],
    "Q_x2": lambda o: o.Qd[1],
    "E_x1": lambda o: o.E[0],
    "E_x2": lambda o: o.E[1],
    "R_Gamma": lambda o: o.R,
    "V_Gamma": lambda o: o.Vf,
    "W_Gamma": lambda o: o.wf[None, :],
    "N_Gamma": lambda o: o.nf,
    "nodes": lambda o: o.nodes,
    "face_nodes": lambda o: o.face_nodes,
}


def _format_matrix(A: np.ndarray) -> str:
    A = np.atleast_2d(A)
    data = ",".join(format(float(x), ".17g") for x in A.ravel())
    return f'{{"rows": {A.shape[0]}, "cols": {A.shape[1]}, "data": [{data}]}}'


def export_json(opset: OperatorSet, path: str | Path | None = None) -> str:
    """Serialize to JSON: scalar metadata plus ``matrices: {name: {rows, cols, data}}``.

    ``W`` and ``W_Gamma`` are stored as 1-row matrices holding the diagonal;
    ``N_Gamma`` holds one outward normal per face node. Floats are written with
    17 significant digits, which round-trips IEEE doubles exactly. Key order is
    fixed, so the output is byte-for-byte reproducible.
    """
    head = {
        "schema": "mcsbp.operator/1",
        "kind": opset.kind,
        "P": opset.P,
        "Q": opset.Q,
        "quadrature": opset.quad_name,
        "N": opset.N,
        "N_P": opset.NP,
        "M": opset.M,
        "edge_sizes": list(opset.edge_sizes),
    }
    parts = [f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in head.items()]
    mats = [f"    {json.dumps(name)}: {_format_matrix(fn(opset))}" for name, fn in _MATRICES.items()]
    text = "{\n" + ",\n".join(parts) + ',\n  "matrices": {\n' + ",\n".join(mats) + "\n  }\n}\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def import_json(source: str | Path) -> OperatorSet:
    text = source if isinstance(source, str) and source.lstrip().startswith("{") else Path(source).read_text()
    obj = json.loads(text)
    mats = {
        name: np.array(m["data"], dtype=float).reshape(m["rows"], m["cols"])
        for name, m in obj["matrices"].items()
    }
    return OperatorSet(
        kind=obj["kind"],
        P=obj["P"],
        w=mats["W"][0],
        V=mats["V"],
        Vx=np.stack([mats["V_x1"], mats["V_x2"]]),
        D=np.stack([mats["D_x1"], mats["D_x2"]]),
        Qd=np.stack([mats["Q_x1"], mats["Q_x2"]]),
        E=np.stack([mats["E_x1"], mats["E_x2"]]),
        R=mats["R_Gamma"],
        Vf=mats["V_Gamma"],
        wf=mats["W_Gamma"][0],
        nf=mats["N_Gamma"],
        nodes=mats["nodes"],
        face_nodes=mats["face_nodes"],
        edge_sizes=tuple(obj["edge_sizes"]),
        Q=obj["Q"],
        quad_name=obj["quadrature"],
    )
