"""Duhamel operator, time-weighted coefficient norms and the certified Picard iteration.

Solutions are coefficient trajectories on a uniform time grid.  The integral
in Duhamel's formula uses composite trapezoid quadrature per coefficient, in
integrating-factor form

    int_0^t exp(-(t - s) m) D(s) ds = exp(-t m) int_0^t exp(s m) D(s) ds,

which is exact algebra for the pure-phase propagators used here.  All
products are truncated to the l1 box |n|_1 <= N after evaluation.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import qpfield as qf
from .lattice import FrequencyVector, LatticeBox
from .models import ModelSpec, lipschitz_bound, nonlinear_term, norm_bound
from .qpfield import CoefficientField, ordered_sum
from .symbols import SymbolSpec

log = logging.getLogger(__name__)

DIRECTIONS = ("forward", "backward", "both")


class CertificationError(ValueError):
    """The requested (k, kappa, epsilon) admit no contraction setup."""


class DataBallError(ValueError):
    """Initial data lies outside the certified ball."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, defects: Sequence[float]):
        super().__init__(message)
        self.defects = list(defects)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform nodes t_j = j T / M on [0, T], [-T, 0] or [-T, T], in increasing order."""

    T: float
    M: int
    direction: str = "forward"

    def __post_init__(self):
        if not self.T > 0 or self.M < 1:
            raise ValueError("need T > 0 and M >= 1")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")

    @property
    def step(self) -> float:
        return self.T / self.M

    @property
    def nodes(self) -> np.ndarray:
        pos = np.array([(j * self.T) / self.M for j in range(self.M + 1)])
        if self.direction == "forward":
            return pos
        if self.direction == "backward":
            return -pos[::-1]
        return np.concatenate([-pos[:0:-1], pos])

    @property
    def zero_index(self) -> int:
        return 0 if self.direction == "forward" else self.M

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.T, self.M * factor, self.direction)


class Trajectory:
    """One coefficient array per grid node, all truncated to the same box."""

    __slots__ = ("grid", "omega", "values", "real")

    def __init__(self, grid: TimeGrid, omega: FrequencyVector, values, real: bool = False):
        arr = np.array(values, dtype=complex)
        if arr.shape[0] != len(grid.nodes) or arr.ndim != omega.nu + 1:
            raise ValueError(f"values of shape {arr.shape} do not fit the grid/omega")
        arr.setflags(write=False)
        self.grid = grid
        self.omega = omega
        self.values = arr
        self.real = bool(real)

    @classmethod
    def from_states(cls, grid: TimeGrid, states: Sequence[CoefficientField]) -> "Trajectory":
        r = max(s.radius for s in states)
        vals = np.stack([s.resized(r).data for s in states])
        return cls(grid, states[0].omega, vals, real=all(s.real for s in states))

    @property
    def radius(self) -> int:
        return (self.values.shape[1] - 1) // 2

    @property
    def box(self) -> LatticeBox:
        return LatticeBox(self.radius, self.omega.nu)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def __len__(self) -> int:
        return self.values.shape[0]

    def state(self, j: int) -> CoefficientField:
        return CoefficientField(self.omega, self.values[j], real=self.real, check=False)

    def states(self) -> list[CoefficientField]:
        return [self.state(j) for j in range(len(self))]

    def final(self) -> CoefficientField:
        """State at t = T (t = -T for a backward grid)."""
        return self.state(0 if self.grid.direction == "backward" else len(self) - 1)

    def _like(self, values, real=None) -> "Trajectory":
        return Trajectory(self.grid, self.omega, values, self.real if real is None else real)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        _check_compatible(self, other)
        return self._like(self.values - other.values, self.real and other.real)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        _check_compatible(self, other)
        return self._like(self.values + other.values, self.real and other.real)

    def max_abs_diff(self, other: "Trajectory") -> float:
        _check_compatible(self, other)
        return float(np.max(np.abs(self.values - other.values)))

    def subsample(self, stride: int) -> "Trajectory":
        """Keep every ``stride``-th node counted from t = 0."""
        if self.grid.M % stride:
            raise ValueError(f"stride {stride} does not divide M={self.grid.M}")
        z = self.grid.zero_index
        keep = [j for j in range(len(self)) if (j - z) % stride == 0]
        grid = TimeGrid(self.grid.T, self.grid.M // stride, self.grid.direction)
        return Trajectory(grid, self.omega, self.values[keep], self.real)

    def truncate(self, N: int) -> "Trajectory":
        return Trajectory.from_states(self.grid, [s.truncate(N) for s in self.states()])

    def realness_defect(self) -> float:
        axes = tuple(range(1, self.values.ndim))
        return float(np.max(np.abs(np.flip(self.values, axis=axes) - np.conj(self.values))))

    def coefficient(self, n: Sequence[int]) -> np.ndarray:
        """Time series of one coefficient over the nodes."""
        return self.values[(slice(None),) + self.box.slot(n)]

    def write_csv(self, path) -> None:
        """Rows (t, n_1..n_nu, re, im) for every node and every index in the box."""
        box = self.box
        idx = box.indices()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"n{i + 1}" for i in range(self.omega.nu)] + ["re", "im"])
            for j, t in enumerate(self.nodes):
                for n in idx:
                    v = self.values[(j,) + box.slot(n)]
                    w.writerow([repr(float(t))] + list(n) + [repr(float(v.real)), repr(float(v.imag))])


def _check_compatible(a: Trajectory, b: Trajectory) -> None:
    if a.values.shape != b.values.shape or not np.array_equal(a.nodes, b.nodes) or a.omega != b.omega:
        raise ValueError("trajectories live on different grids, boxes or frequency vectors")


# linear pieces


def propagate(u: CoefficientField, m: SymbolSpec, t: float) -> CoefficientField:
    """exp(-t L) u, coefficientwise phase exp(-t m(<omega, n>))."""
    xi = u.box.frequencies(u.omega)
    return CoefficientField(u.omega, m.phase(t, xi) * u.data, real=u.real and m.claims_symmetry, check=False)


def _phase_table(m: SymbolSpec, xi: np.ndarray, times: np.ndarray) -> np.ndarray:
    return np.stack([m.phase(t, xi) for t in times])


def free_evolution(u0: CoefficientField, m: SymbolSpec, grid: TimeGrid) -> Trajectory:
    xi = u0.box.frequencies(u0.omega)
    vals = _phase_table(m, xi, grid.nodes) * u0.data
    return Trajectory(grid, u0.omega, vals, real=u0.real and m.claims_symmetry)


def x_norm(traj: Trajectory, k: float, gamma: float) -> float:
    """sum_n max_j |u(t_j, n)| exp((k - gamma |t_j|) |n|): sup over nodes inside the sum."""
    tabs = np.abs(traj.nodes)
    if k - gamma * float(tabs.max()) < -1e-15:
        raise ValueError(f"x_norm needs k - gamma T >= 0, got k={k}, gamma={gamma}, T={tabs.max()}")
    shape = (len(tabs),) + (1,) * traj.omega.nu
    rate = (k - gamma * tabs).reshape(shape)
    norms = traj.box.norms[None]
    mag = np.abs(traj.values)
    weighted = np.where(mag > 0, mag * np.exp(np.where(mag > 0, rate * norms, 0.0)), 0.0)
    return float(ordered_sum(weighted.max(axis=0)))


def duhamel_integral(D: np.ndarray, m: SymbolSpec, grid: TimeGrid, xi: np.ndarray) -> np.ndarray:
    """Trapezoid values of int_0^{t_j} exp(-(t_j - s) m) D(s) ds at every node (signed for t_j < 0)."""
    times = grid.nodes
    G = _phase_table(m, xi, -times) * D
    S = np.zeros_like(G)
    h = grid.step
    z = grid.zero_index
    for j in range(z + 1, len(times)):
        S[j] = S[j - 1] + (0.5 * h) * (G[j - 1] + G[j])
    for j in range(z - 1, -1, -1):
        S[j] = S[j + 1] - (0.5 * h) * (G[j + 1] + G[j])
    return _phase_table(m, xi, times) * S


def linear_duhamel(W: Trajectory, m: SymbolSpec) -> Trajectory:
    """int_0^t exp(-(t - s) L) d/dx W(s) ds on the grid of W."""
    xi = W.box.frequencies(W.omega)
    D = 1j * xi[None] * W.values
    return W._like(duhamel_integral(D, m, W.grid, xi), False)


def nonlinear_values(model: ModelSpec, traj: Trajectory, threads: int = 1) -> np.ndarray:
    """N(u(t_j)) truncated to the box, stacked over nodes."""
    N = traj.radius

    def one(j: int) -> np.ndarray:
        return nonlinear_term(model, traj.state(j)).truncate(N).data

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(len(traj))))
    else:
        rows = [one(j) for j in range(len(traj))]
    return np.stack(rows)


def duhamel_map(
    u0: CoefficientField, traj: Trajectory, model: ModelSpec, free: Trajectory | None = None, threads: int = 1
) -> Trajectory:
    """Gamma_{u0}(u)(t_j) = exp(-t_j L) u0 - int_0^{t_j} exp(-(t_j - s) L) N(u(s)) ds."""
    if u0.omega != traj.omega:
        raise qf.FrequencyMismatchError("initial data and trajectory use different frequency vectors")
    if free is None:
        free = free_evolution(u0.truncate(traj.radius), model.symbol, traj.grid)
    xi = traj.box.frequencies(traj.omega)
    D = nonlinear_values(model, traj, threads)
    real = traj.real and free.real and model.nonlinearity.preserves_realness
    return Trajectory(traj.grid, traj.omega, free.values - duhamel_integral(D, model.symbol, traj.grid, xi), real)


# certification


def embedding_constant(eps: float, nu: int) -> float:
    """sum over Z^nu of exp(-eps |n|_1) = coth(eps / 2)^nu."""
    return (1.0 / math.tanh(eps / 2.0)) ** nu


def horizon(gamma: float, k: float, kappa: float, eps: float) -> float:
    """Largest admissible T for a given gamma, with a factor-two margin."""
    return min((k - kappa) / (2 * gamma), (k - eps - kappa) / (2 * gamma), (kappa - eps) / (2 * gamma))


@dataclass(frozen=True)
class Certificate:
    R: float
    gamma: float
    T: float
    q: float
    Q: float
    epsilon: float
    k: float
    kappa: float
    omega_norm: float
    model: str
    regime: str
    lipschitz: float
    bounds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def certify(
    model: ModelSpec,
    omega: FrequencyVector,
    R: float,
    k: float,
    kappa: float,
    epsilon: float | None = None,
    gamma_min: float = 1.0,
) -> Certificate:
    """Pick (gamma, T) so that the Duhamel map contracts with factor q <= 1/2.

    Derivative models: for each pair (data bound, ball radius) in
    (R, 2R), (RQ, 2RQ), (RQ, 3RQ) gamma must satisfy the self-map bound
    rho0 + (|omega|/gamma) F(rho) <= rho and the contraction bound
    (|omega|/gamma) Lip(rho, rho) <= 1/2.  q is the realized factor on
    the 2R ball in the k-scale.  Models without a derivative run with
    gamma = 0 and impose T F(2R) <= R and T Lip(2R, 2R) <= 1/2.
    """
    if R < 0:
        raise ValueError("R must be nonnegative")
    if not (k > kappa > 0):
        raise CertificationError(f"need k > kappa > 0, got k={k}, kappa={kappa}")
    eps = 0.5 * (k - kappa) if epsilon is None else float(epsilon)
    if not eps > 0:
        raise CertificationError("epsilon must be positive")
    if kappa >= k - eps:
        raise CertificationError(f"infeasible: kappa={kappa} >= k - epsilon={k - eps}")
    nu = omega.nu
    Q = embedding_constant(eps, nu)
    w = omega.norm

    if model.has_derivative:
        if eps >= kappa:
            raise CertificationError(f"infeasible: embedding needs epsilon < kappa, got {eps} >= {kappa}")
        bounds = {}
        if R > 0:
            for label, rho0, rho in (("k_2R", R, 2 * R), ("kme_2RQ", R * Q, 2 * R * Q), ("kme_3RQ", R * Q, 3 * R * Q)):
                bounds[f"self_{label}"] = w * norm_bound(model, rho) / (rho - rho0)
                bounds[f"contract_{label}"] = 2 * w * lipschitz_bound(model, rho, rho)
        gamma = max([gamma_min] + list(bounds.values()))
        lip = lipschitz_bound(model, 2 * R, 2 * R)
        q = w * lip / gamma
        T = horizon(gamma, k, kappa, eps)
        return Certificate(R, gamma, T, q, Q, eps, k, kappa, w, model.name, "weighted", lip, bounds)

    lip = lipschitz_bound(model, 2 * R, 2 * R)
    F = norm_bound(model, 2 * R)
    t_self = R / F if F > 0 else math.inf
    t_contract = 0.5 / lip if lip > 0 else math.inf
    T = min(t_self, t_contract)
    if not math.isfinite(T):
        T = 1.0
    bounds = {"T_self": t_self, "T_contract": t_contract}
    return Certificate(R, 0.0, T, T * lip, Q, eps, k, kappa, w, model.name, "ode", lip, bounds)


@dataclass(frozen=True)
class SolverParams:
    k: float
    kappa: float
    gamma: float
    T: float
    R: float
    N: int
    M: int
    tol: float = 1e-10
    max_iter: int = 50
    direction: str = "forward"
    threads: int = 1

    def __post_init__(self):
        if not (self.k > 0 and self.kappa > 0 and self.T > 0 and self.gamma >= 0 and self.R >= 0):
            raise ValueError("k, kappa, T must be positive; gamma, R nonnegative")
        if not self.k - self.gamma * self.T > self.kappa:
            raise ValueError(
                f"need k - gamma T > kappa, got {self.k} - {self.gamma}*{self.T} <= {self.kappa}"
            )
        if self.N < 0 or self.M < 1 or self.max_iter < 1 or self.tol <= 0:
            raise ValueError("bad truncation / iteration parameters")

    @classmethod
    def from_certificate(cls, cert: Certificate, N: int, M: int, **kw) -> "SolverParams":
        T = kw.pop("T", None) or cert.T
        if T > cert.T * (1 + 1e-12):
            raise CertificationError(f"T={T} exceeds certified horizon {cert.T}")
        return cls(k=cert.k, kappa=cert.kappa, gamma=cert.gamma, T=T, R=cert.R, N=N, M=M, **kw)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.T, self.M, self.direction)

    def with_(self, **kw) -> "SolverParams":
        d = asdict(self)
        d.update(kw)
        return SolverParams(**d)


@dataclass
class PicardResult:
    trajectory: Trajectory
    iterations: int
    final_defect: float
    defects: list[float]
    converged: bool
    certificate: Certificate | None = None

    @property
    def ratios(self) -> list[float]:
        d = self.defects
        return [d[i] / d[i - 1] for i in range(1, len(d)) if d[i - 1] > 0]

    def contraction_ok(self, slack: float = 0.1) -> bool:
        if self.certificate is None:
            return True
        return all(r <= self.certificate.q + slack for r in self.ratios)


def _prepare_data(u0: CoefficientField, params: SolverParams) -> CoefficientField:
    if u0.outside_mass(params.N) > 0:
        raise ValueError(f"initial data has coefficients outside the box |n|_1 <= {params.N}")
    return u0.truncate(params.N)


def picard_solve(
    u0: CoefficientField,
    model: ModelSpec,
    params: SolverParams,
    certificate: Certificate | None = None,
    strict: bool = True,
) -> PicardResult:
    """Iterate u <- Gamma_{u0}(u) from the free evolution until the X-norm defect is <= tol.

    With ``strict=False`` a non-converged run returns its last iterate instead of raising.
    """
    norm0 = qf.norm_vk(u0, params.k)
    if not (norm0 < params.R or norm0 == 0):
        raise DataBallError(f"||u0||_(omega,k) = {norm0:.6g} is not below R = {params.R}")
    u0 = _prepare_data(u0, params)
    free = free_evolution(u0, model.symbol, params.grid)
    current = free
    defects: list[float] = []
    for it in range(1, params.max_iter + 1):
        nxt = duhamel_map(u0, current, model, free=free, threads=params.threads)
        defect = x_norm(nxt - current, params.k, params.gamma)
        defects.append(defect)
        current = nxt
        log.debug("picard iteration %d defect %.3e", it, defect)
        if defect <= params.tol:
            result = PicardResult(current, it, defect, defects, True, certificate)
            if not result.contraction_ok():
                log.warning("measured contraction ratios %s exceed q + 0.1", result.ratios)
            return result
    if strict:
        raise ConvergenceError(
            f"Picard iteration did not reach tol={params.tol} in {params.max_iter} iterations", defects
        )
    return PicardResult(current, params.max_iter, defects[-1], defects, False, certificate)


def residual(traj: Trajectory, u0: CoefficientField, model: ModelSpec, threads: int = 1) -> float:
    """Max over nodes and box of |u(t_j, n) - Gamma_{u0}(u)(t_j, n)|, same quadrature as the solver."""
    return traj.max_abs_diff(duhamel_map(u0.truncate(traj.radius), traj, model, threads=threads))


def quadrature_refinement(
    u0: CoefficientField, model: ModelSpec, params: SolverParams, tight_tol: float = 1e-15, max_iter: int = 80
) -> dict:
    """Residuals that isolate the O((T/M)^2) quadrature error.

    The 2M (resp. 4M) fixed point, restricted to the M (resp. 2M) grid, is
    plugged into the M (resp. 2M) residual; their ratio should be near 4.
    """
    res = {}
    sols = {}
    for factor in (1, 2, 4):
        p = params.with_(M=params.M * factor, tol=min(params.tol, tight_tol), max_iter=max_iter)
        sols[factor] = picard_solve(u0, model, p, strict=False).trajectory
    res["residual_M"] = residual(picard_solve(u0, model, params).trajectory, u0, model)
    res["quadrature_M"] = residual(sols[2].subsample(2), u0, model)
    res["quadrature_2M"] = residual(sols[4].subsample(2), u0, model)
    res["ratio"] = res["quadrature_M"] / res["quadrature_2M"] if res["quadrature_2M"] > 0 else math.inf
    return res


def data_to_solution_lipschitz(
    u0a: CoefficientField, u0b: CoefficientField, model: ModelSpec, params: SolverParams
) -> float:
    """||u_a - u_b||_{k,gamma,T} / ||u0a - u0b||_{omega,k}; 0 when the data coincide."""
    denom = qf.norm_vk(u0a - u0b, params.k)
    if denom < 1e-15:
        return 0.0
    ua = picard_solve(u0a, model, params).trajectory
    ub = picard_solve(u0b, model, params).trajectory
    return x_norm(ua - ub, params.k, params.gamma) / denom


def translate_trajectory(traj: Trajectory, x0: float) -> Trajectory:
    xi = traj.box.frequencies(traj.omega)
    return traj._like(np.exp(1j * xi * x0)[None] * traj.values)
