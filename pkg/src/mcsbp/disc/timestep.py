"""Low-storage five-stage fourth-order Runge-Kutta (Carpenter and Kennedy)."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["LSRK45_A", "LSRK45_B", "LSRK45_C", "SolutionBlowup", "lsrk45_integrate"]

LSRK45_A = np.array([
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
])
LSRK45_B = np.array([
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
])
LSRK45_C = np.array([
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
])


class SolutionBlowup(FloatingPointError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite solution at step {step} (t = {t:.6g})")
        self.step = step
        self.t = t


def lsrk45_integrate(rhs, u0, dt: float, T: float, t0: float = 0.0, stage_callback=None):
    """Integrate ``du/dt = rhs(u, t)`` from ``t0`` to ``T``.

    Full steps of size ``dt`` are taken and the last one is shortened to land
    on ``T``. ``stage_callback(u, t)`` sees every stage value. Returns the
    final state and the number of steps taken.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    u = np.array(u0, dtype=float, copy=True)
    du = np.zeros_like(u)
    t = t0
    nsteps = max(1, math.ceil((T - t0) / dt - 1e-12)) if T > t0 else 0
    for step in range(nsteps):
        h = min(dt, T - t)
        for a, b, c in zip(LSRK45_A, LSRK45_B, LSRK45_C):
            du = a * du + h * rhs(u, t + c * h)
            u = u + b * du
            if stage_callback is not None:
                stage_callback(u, t + c * h)
        t = t0 + (step + 1) * dt if step + 1 < nsteps else T
        if not np.all(np.isfinite(u)):
            raise SolutionBlowup(step + 1, t)
    return u, nsteps
