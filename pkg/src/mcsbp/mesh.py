"""Periodic split-quad triangle meshes of [0, 2 pi]^2 and affine push-forward of operators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .operators import OperatorError, OperatorSet

__all__ = [
    "PeriodicTriMesh",
    "build_periodic_mesh",
    "physical_operators",
    "class_operators",
    "neighbor_gather",
    "exchange_traces",
    "mesh_summary",
]

PERIOD = 2.0 * math.pi

# reference vertices (-1,-1), (1,-1), (-1,1) -> local vertex 0, 1, 2
# local edges: 0 bottom (v0 -> v1), 1 left (v0 -> v2), 2 hypotenuse (v1 -> v2)
_EDGE_VERTS = ((0, 1), (0, 2), (1, 2))

# lattice offsets of the local vertices for the two congruence classes of a quad
# split along its lower-left to upper-right diagonal
_CLASS_VERTS = (
    ((0, 0), (1, 0), (1, 1)),  # class 0: lower-right triangle
    ((0, 0), (1, 1), (0, 1)),  # class 1: upper-left triangle
)


@dataclass(frozen=True)
class PeriodicTriMesh:
    N1D: int
    h: float
    cls: np.ndarray  # (K,) congruence class of each element
    lattice: np.ndarray  # (K, 3, 2) unwrapped integer vertex coordinates
    A: np.ndarray  # (2, 2, 2) reference-to-physical Jacobian per class
    offset: np.ndarray  # (K, 2): x = A[cls] r + offset
    nbr_elem: np.ndarray  # (K, 3)
    nbr_edge: np.ndarray  # (K, 3)
    reversed: np.ndarray  # (K, 3) bool, neighbour traverses the shared edge backwards
    faces: tuple  # (elem, edge, nbr elem, nbr edge, reversed), one record per shared edge

    @property
    def K(self) -> int:
        return self.cls.size

    @property
    def J(self) -> np.ndarray:
        return np.array([np.linalg.det(self.A[c]) for c in self.cls])

    def vertices(self) -> np.ndarray:
        return self.lattice * self.h

    def map_points(self, ref_pts: np.ndarray) -> np.ndarray:
        """Physical coordinates (K, n, 2) of reference points on every element."""
        ref_pts = np.asarray(ref_pts, dtype=float)
        out = np.einsum("kij,nj->kni", self.A[self.cls], ref_pts)
        return out + self.offset[:, None, :]


def _affine(lat_verts: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    v = lat_verts * h
    A = 0.5 * np.column_stack([v[1] - v[0], v[2] - v[0]])
    b = v[0] + A @ np.ones(2)
    return A, b


def _edge_points(mesh_lat, k, e, t, h):
    a, b = _EDGE_VERTS[e]
    p0 = mesh_lat[k, a] * h
    p1 = mesh_lat[k, b] * h
    return 0.5 * (1 - t)[:, None] * p0 + 0.5 * (1 + t)[:, None] * p1


def _periodic_gap(x, y):
    d = x - y
    d -= PERIOD * np.round(d / PERIOD)
    return float(np.max(np.abs(d)))


def build_periodic_mesh(N1D: int) -> PeriodicTriMesh:
    """Split an N1D x N1D periodic quad grid into K = 2 N1D^2 triangles."""
    if N1D < 2:
        raise ValueError("N1D must be at least 2")
    h = PERIOD / N1D
    K = 2 * N1D * N1D
    cls = np.zeros(K, dtype=int)
    lattice = np.zeros((K, 3, 2), dtype=int)
    for iy in range(N1D):
        for ix in range(N1D):
            for c in (0, 1):
                k = 2 * (iy * N1D + ix) + c
                cls[k] = c
                lattice[k] = np.array(_CLASS_VERTS[c]) + (ix, iy)
    A = np.stack([_affine(np.array(_CLASS_VERTS[c]), h)[0] for c in (0, 1)])
    offset = np.array([_affine(lattice[k], h)[1] for k in range(K)])

    # match edges by (canonical start vertex mod N1D, direction)
    table: dict = {}
    for k in range(K):
        for e, (a, b) in enumerate(_EDGE_VERTS):
            pa, pb = lattice[k, a], lattice[k, b]
            start, end = (pa, pb) if tuple(pa) <= tuple(pb) else (pb, pa)
            key = (int(start[0] % N1D), int(start[1] % N1D), *map(int, end - start))
            table.setdefault(key, []).append((k, e, tuple(pa) <= tuple(pb)))
    nbr_elem = -np.ones((K, 3), dtype=int)
    nbr_edge = -np.ones((K, 3), dtype=int)
    rev = np.zeros((K, 3), dtype=bool)
    faces = []
    probe = np.array([-0.7, 0.1, 0.9])  # asymmetric, so orientation is unambiguous
    for key, sides in table.items():
        if len(sides) != 2:
            raise RuntimeError(f"edge {key} shared by {len(sides)} elements")
        (k1, e1, f1), (k2, e2, f2) = sides
        r = f1 != f2
        x1 = _edge_points(lattice, k1, e1, probe, h)
        x2 = _edge_points(lattice, k2, e2, -probe if r else probe, h)
        if _periodic_gap(x1, x2) > 1e-11:
            raise RuntimeError("periodic face matching failed")
        nbr_elem[k1, e1], nbr_edge[k1, e1], rev[k1, e1] = k2, e2, r
        nbr_elem[k2, e2], nbr_edge[k2, e2], rev[k2, e2] = k1, e1, r
        faces.append((k1, e1, k2, e2, bool(r)))
    return PeriodicTriMesh(N1D, h, cls, lattice, A, offset, nbr_elem, nbr_edge, rev, tuple(faces))


def physical_operators(opset: OperatorSet, A: np.ndarray, b=(0.0, 0.0)) -> OperatorSet:
    """Push reference operators forward through ``x = A r + b``.

    Derivatives combine with the inverse Jacobian, volume weights scale by
    ``det A``, and face weights/normals follow Nanson's formula
    ``n ds = det(A) A^{-T} n_ref ds_ref``. The face reconstruction ``R`` and
    the basis values are unchanged.
    """
    A = np.asarray(A, dtype=float)
    J = float(np.linalg.det(A))
    if abs(J) < 1e-300:
        raise OperatorError("singular element map")
    Ainv = np.linalg.inv(A)
    D = np.einsum("ed,enm->dnm", Ainv, opset.D)
    Vx = np.einsum("ed,enm->dnm", Ainv, opset.Vx)
    w = J * opset.w
    Qd = w[None, :, None] * D
    E = Qd + Qd.transpose(0, 2, 1)
    nscaled = J * opset.nf @ Ainv  # rows: J A^{-T} n_ref
    scale = np.linalg.norm(nscaled, axis=1)
    nf = nscaled / scale[:, None]
    wf = opset.wf * scale
    b = np.asarray(b, dtype=float)
    return replace(
        opset,
        w=w,
        Vx=Vx,
        D=D,
        Qd=Qd,
        E=E,
        wf=wf,
        nf=nf,
        nodes=opset.nodes @ A.T + b,
        face_nodes=opset.face_nodes @ A.T + b,
        meta={**opset.meta, "jacobian": J},
    )


def class_operators(opset: OperatorSet, mesh: PeriodicTriMesh) -> tuple[OperatorSet, OperatorSet]:
    """Physical operator sets for the two congruence classes (origin-free)."""
    return tuple(physical_operators(opset, mesh.A[c]) for c in (0, 1))


def neighbor_gather(mesh: PeriodicTriMesh, opset: OperatorSet) -> np.ndarray:
    """Flat index into a (K, M) face-trace array giving each node's neighbour value.

    Orientation is verified by comparing physical face-node coordinates
    modulo the period.
    """
    sizes = opset.edge_sizes
    M = sum(sizes)
    if len(set(sizes)) != 1:
        raise OperatorError("neighbour exchange needs equal node counts on every edge")
    n = sizes[0]
    starts = np.cumsum((0,) + tuple(sizes[:-1]))
    idx = np.empty((mesh.K, M), dtype=np.int64)
    local = np.arange(n)
    for k in range(mesh.K):
        for e in range(3):
            kn, en = mesh.nbr_elem[k, e], mesh.nbr_edge[k, e]
            order = local[::-1] if mesh.reversed[k, e] else local
            idx[k, starts[e] + local] = kn * M + starts[en] + order
    xf = mesh.map_points(opset.face_nodes).reshape(mesh.K * M, 2)
    if _periodic_gap(xf, xf[idx.ravel()]) > 1e-11:
        raise RuntimeError("face node permutation does not match physical coordinates")
    return idx


def exchange_traces(u: np.ndarray, mesh: PeriodicTriMesh, opset: OperatorSet, gather=None):
    """Own and neighbour face traces ``(R u_k, R u_nbr permuted)``, each (K, M)."""
    gather = neighbor_gather(mesh, opset) if gather is None else gather
    own = u @ opset.R.T
    return own, own.ravel()[gather]


def mesh_summary(mesh: PeriodicTriMesh) -> str:
    """Debug summary as JSON text."""
    return json.dumps(
        {
            "N1D": mesh.N1D,
            "K": mesh.K,
            "h": mesh.h,
            "faces": len(mesh.faces),
            "class_counts": [int(np.sum(mesh.cls == c)) for c in (0, 1)],
            "class_map": mesh.cls.tolist(),
            "jacobians": [float(np.linalg.det(mesh.A[c])) for c in (0, 1)],
        },
        indent=2,
    )
