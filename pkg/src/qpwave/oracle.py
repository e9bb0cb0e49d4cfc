"""Independent check: integrating-factor (Lawson) RK4 on the truncated coefficient ODE

    d/dt u(t, n) = -m(<omega, n>) u(t, n) - N(u)(t, n),

solved for v(t, n) = exp(t m) u(t, n) with classical RK4 and mapped back with
exact phases.  The box truncation matches the Picard solver, so the two agree
up to time-integration error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import ModelSpec, nonlinear_term
from .qpfield import CoefficientField, NonFiniteError
from .solver import TimeGrid, Trajectory


class StepError(FloatingPointError):
    pass


@dataclass(frozen=True)
class OdeParams:
    dt: float
    steps: int
    N: int

    def __post_init__(self):
        if not self.dt > 0 or self.steps < 1 or self.N < 0:
            raise ValueError("need dt > 0, steps >= 1, N >= 0")

    @classmethod
    def for_horizon(cls, T: float, steps: int, N: int) -> "OdeParams":
        return cls(T / steps, steps, N)

    @property
    def horizon(self) -> float:
        return self.dt * self.steps


def ode_rhs(u: CoefficientField, model: ModelSpec, N: int | None = None) -> CoefficientField:
    """-m u - N(u), with convolution output outside |n|_1 <= N dropped."""
    N = u.radius if N is None else N
    u = u.truncate(N)
    xi = u.box.frequencies(u.omega)
    lin = model.symbol(xi) * u.data
    nl = nonlinear_term(model, u).truncate(N).data
    return CoefficientField(u.omega, -lin - nl, real=False, check=False)


def _nonlinear_only(model: ModelSpec, omega, data: np.ndarray, N: int) -> np.ndarray:
    u = CoefficientField(omega, data, check=False)
    return nonlinear_term(model, u).truncate(N).data


def _run(u0: CoefficientField, model: ModelSpec, dt: float, steps: int, N: int) -> list[np.ndarray]:
    omega = u0.omega
    u0 = u0.truncate(N)
    xi = u0.box.frequencies(omega)
    sym = model.symbol

    def f(t: float, v: np.ndarray) -> np.ndarray:
        u = sym.phase(t, xi) * v
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                return -sym.phase(-t, xi) * _nonlinear_only(model, omega, u, N)
        except NonFiniteError as e:
            raise StepError(f"non-finite stage value at t={t:.6g}") from e

    v = u0.data.copy()
    out = [u0.data.copy()]
    for j in range(steps):
        t = j * dt
        k1 = f(t, v)
        k2 = f(t + 0.5 * dt, v + (0.5 * dt) * k1)
        k3 = f(t + 0.5 * dt, v + (0.5 * dt) * k2)
        k4 = f(t + dt, v + dt * k3)
        with np.errstate(over="ignore", invalid="ignore"):
            v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(v)):
            raise StepError(f"non-finite coefficient after step {j + 1}")
        out.append(sym.phase((j + 1) * dt, xi) * v)
    return out


def expRK4_solve(u0: CoefficientField, model: ModelSpec, params: OdeParams, direction: str = "forward") -> Trajectory:
    """Trajectory on the nodes j * dt (and/or their negatives), one node per step."""
    N = params.N
    fwd = bwd = None
    if direction in ("forward", "both"):
        fwd = _run(u0, model, params.dt, params.steps, N)
    if direction in ("backward", "both"):
        bwd = _run(u0, model, -params.dt, params.steps, N)
    if direction == "forward":
        states = fwd
    elif direction == "backward":
        states = bwd[::-1]
    elif direction == "both":
        states = bwd[:0:-1] + fwd
    else:
        raise ValueError(f"unknown direction {direction!r}")
    grid = TimeGrid(params.horizon, params.steps, direction)
    real = u0.real and model.real_valued
    return Trajectory(grid, u0.omega, np.stack(states), real=real)


def measure_order(
    u0: CoefficientField, model: ModelSpec, T: float, steps: int, N: int, ref_factor: int = 16
) -> dict:
    """Observed order from terminal errors at ``steps`` and ``2*steps``.

    Both are measured against a ``ref_factor*steps`` run, so for a fourth-order
    method the reference contributes a relative bias of about (2/ref_factor)^4.
    """
    if ref_factor < 4:
        raise ValueError("ref_factor must be at least 4")
    ref = expRK4_solve(u0, model, OdeParams.for_horizon(T, ref_factor * steps, N)).final()
    e1 = expRK4_solve(u0, model, OdeParams.for_horizon(T, steps, N)).final().max_abs_diff(ref)
    e2 = expRK4_solve(u0, model, OdeParams.for_horizon(T, 2 * steps, N)).final().max_abs_diff(ref)
    ratio = e1 / e2 if e2 > 0 else math.inf
    return {"T": T, "steps": steps, "error_coarse": e1, "error_fine": e2, "ratio": ratio, "order": math.log2(ratio)}
