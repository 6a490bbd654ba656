"""Single-element linear advection: semi-discrete matrices, DG reduction and spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import densela
from ..operators import OperatorSet

__all__ = [
    "DEFAULT_ALPHA",
    "AdvectionSystem",
    "SpectrumReport",
    "exact_advection",
    "advection_system",
    "dg_reduce",
    "spectrum",
    "energy_matrix",
    "EquivalenceRun",
    "advect_equivalence",
]

DEFAULT_ALPHA = np.array([1.0, 1.0]) / math.sqrt(2.0)


def exact_advection(x: np.ndarray, t: float, alpha=DEFAULT_ALPHA) -> np.ndarray:
    """Traveling wave ``sin(2 pi (alpha . x - t))``; solves u_t + alpha . grad u = 0 for unit |alpha|."""
    x = np.asarray(x, dtype=float)
    return np.sin(2.0 * math.pi * (x @ np.asarray(alpha) - t))


@dataclass(frozen=True)
class AdvectionSystem:
    """``du/dt = A u + Bg @ g(face_nodes, t)``."""

    A: np.ndarray
    Bg: np.ndarray  # (N, M) map from inflow data at face nodes
    alpha: np.ndarray
    Nminus: np.ndarray  # (M,) min(0, alpha . n)
    Nplus: np.ndarray  # (M,) max(0, alpha . n)
    opset: OperatorSet
    exact: object = exact_advection

    def forcing(self, t: float) -> np.ndarray:
        return self.Bg @ self.exact(self.opset.face_nodes, t, self.alpha)

    def rhs(self, u: np.ndarray, t: float) -> np.ndarray:
        return self.A @ u + self.forcing(t)


def advection_system(opset: OperatorSet, alpha=DEFAULT_ALPHA, exact=exact_advection) -> AdvectionSystem:
    """Upwind SAT discretization ``A = -sum_d alpha_d D_d + W^{-1} R^T W_f N_- R``."""
    alpha = np.asarray(alpha, dtype=float)
    an = opset.nf @ alpha
    Nm, Np = np.minimum(0.0, an), np.maximum(0.0, an)
    if np.max(np.abs(Nm + Np - an)) > 1e-14:
        raise ArithmeticError("boundary partition does not reproduce alpha . n")
    inflow = opset.wf * Nm
    A = -(alpha[0] * opset.D[0] + alpha[1] * opset.D[1])
    A = A + (opset.R.T @ (inflow[:, None] * opset.R)) / opset.w[:, None]
    Bg = -(opset.R.T * inflow) / opset.w[:, None]
    return AdvectionSystem(A, Bg, alpha, Nm, Np, opset, exact)


def energy_matrix(system: AdvectionSystem) -> np.ndarray:
    """``W A + A^T W``; negative semidefinite for an energy-stable scheme."""
    WA = system.opset.w[:, None] * system.A
    return WA + WA.T


def dg_reduce(A: np.ndarray, b: np.ndarray, opset: OperatorSet) -> tuple[np.ndarray, np.ndarray]:
    """Modal DG counterpart ``(V^T W A V, V^T W b)``; ``b`` may be a vector or a forcing matrix."""
    if opset.kind != "MC":
        raise ValueError("dg_reduce needs an MC operator set")
    VtW = opset.V.T * opset.w
    return VtW @ A @ opset.V, VtW @ b


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    spectral_radius: float
    zero_count: int
    zero_cutoff: float

    def nonzero(self) -> np.ndarray:
        return self.eigenvalues[np.abs(self.eigenvalues) > self.zero_cutoff]

    def as_dict(self) -> dict:
        return {
            "spectral_radius": self.spectral_radius,
            "zero_count": self.zero_count,
            "zero_cutoff": self.zero_cutoff,
            "n": int(self.eigenvalues.size),
        }


def spectrum(A: np.ndarray, zero_tol: float = 1e-8) -> SpectrumReport:
    """Eigenvalues by the in-house Hessenberg QR.

    Zeros are counted as ``|lambda| <= zero_tol * max(1, ||A||_2)``.
    """
    A = np.asarray(A, dtype=float)
    lam = densela.eig_general(A)
    rho = float(np.max(np.abs(lam))) if lam.size else 0.0
    cutoff = zero_tol * max(1.0, float(np.linalg.norm(A, 2))) if A.size else zero_tol
    zeros = int(np.sum(np.abs(lam) <= cutoff))
    return SpectrumReport(lam, rho, zeros, cutoff)


@dataclass(frozen=True)
class EquivalenceRun:
    P: int
    N: int
    dt: float
    steps: int
    l2_diff: float
    max_null_coord: float  # max |Z^T W u| over all stages (nan for indefinite W)
    energy_max: float  # max u^T |W| u over all stages


def advect_equivalence(opset: OperatorSet, T: float = 2.0, dt: float | None = None) -> EquivalenceRun:
    """Integrate the MC system and its modal DG reduction with identical LSRK steps and compare."""
    from .burgers import l2_diff
    from .timestep import lsrk45_integrate

    sysm = advection_system(opset)
    Adg, Bdg = dg_reduce(sysm.A, sysm.Bg, opset)
    dt = 2.0 / (opset.P + 1) ** 2 if dt is None else dt
    g0 = sysm.exact(opset.nodes, 0.0, sysm.alpha)
    VtW = opset.V.T * opset.w
    u0 = opset.V @ (VtW @ g0)
    ut0 = VtW @ g0
    try:
        Z = densela.w_orthonormal_complement(opset.V, opset.w)
        ZtW = Z.T * opset.w
        track = {"null": 0.0, "energy": 0.0}
    except densela.IndefiniteNormError:
        # no W-orthonormal complement for indefinite weights
        ZtW = None
        track = {"null": math.nan, "energy": 0.0}

    def watch(u, t):
        if ZtW is not None and ZtW.size:
            track["null"] = max(track["null"], float(np.max(np.abs(ZtW @ u))))
        track["energy"] = max(track["energy"], float(u @ (np.abs(opset.w) * u)))

    gf = lambda t: sysm.exact(opset.face_nodes, t, sysm.alpha)
    u, steps = lsrk45_integrate(lambda u, t: sysm.A @ u + sysm.Bg @ gf(t), u0, dt, T, stage_callback=watch)
    ut, _ = lsrk45_integrate(lambda v, t: Adg @ v + Bdg @ gf(t), ut0, dt, T)
    diff = l2_diff(u, opset.V @ ut, opset)
    return EquivalenceRun(opset.P, opset.N, dt, steps, diff, track["null"], track["energy"])
