"""Quasi-periodic functions as finitely supported coefficient arrays.

A :class:`CoefficientField` stores u-hat on the hypercube [-R, R]^nu as a
dense complex array in C order, which is lexicographic order on Z^nu.
Convolutions use scipy's direct (non-FFT) kernel; every norm is accumulated
sequentially in that order so repeated runs are bitwise identical.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import signal

from .lattice import FrequencyVector, LatticeBox, MultiIndex, as_index
from .symbols import SymbolSpec

REAL_ATOL = 1e-12


class FrequencyMismatchError(ValueError):
    """Two fields live on different frequency vectors."""


class NonFiniteError(ValueError):
    """A coefficient is inf or nan."""


def ordered_sum(values: np.ndarray):
    """Left-to-right sum in C order (no pairwise reduction)."""
    flat = np.ravel(values)
    if flat.size == 0:
        return flat.dtype.type(0)
    return np.add.accumulate(flat)[-1]


class CoefficientField:
    """Truncated quasi-periodic function sum_n u(n) exp(i <omega, n> x).

    Instances are immutable.  ``real`` flags a field whose coefficients
    satisfy u(-n) = conj(u(n)); the flag is validated at construction unless
    ``check=False``.
    """

    __slots__ = ("omega", "data", "real")

    def __init__(self, omega: FrequencyVector, data, real: bool = False, check: bool = True):
        arr = np.array(data, dtype=complex)
        if arr.ndim != omega.nu:
            raise ValueError(f"data has {arr.ndim} axes, omega has nu={omega.nu}")
        side = arr.shape[0]
        if side % 2 != 1 or any(s != side for s in arr.shape):
            raise ValueError(f"data must be a centred hypercube of odd side, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("coefficients must be finite")
        arr.setflags(write=False)
        self.omega = omega
        self.data = arr
        self.real = bool(real)
        if real and check:
            defect = realness_defect(self)
            if defect > REAL_ATOL:
                raise ValueError(f"field flagged real violates conjugate symmetry by {defect:.3e}")

    # construction

    @classmethod
    def zeros(cls, omega: FrequencyVector, radius: int = 0, real: bool = True) -> "CoefficientField":
        return cls(omega, np.zeros((2 * radius + 1,) * omega.nu), real=real, check=False)

    @classmethod
    def from_entries(
        cls,
        omega: FrequencyVector,
        entries: Mapping[Sequence[int], complex] | Iterable[tuple[Sequence[int], complex]],
        real: bool = False,
        radius: int | None = None,
    ) -> "CoefficientField":
        items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        idx = [as_index(n, omega.nu) for n, _ in items]
        r = max((max(abs(c) for c in n) for n in idx), default=0)
        if radius is not None:
            if radius < r:
                raise ValueError(f"entries reach radius {r} > requested {radius}")
            r = radius
        arr = np.zeros((2 * r + 1,) * omega.nu, dtype=complex)
        for n, (_, v) in zip(idx, items):
            arr[tuple(c + r for c in n)] += complex(v)
        return cls(omega, arr, real=real)

    @classmethod
    def exponential_preset(
        cls, omega: FrequencyVector, amplitude: float, decay: float, radius: int
    ) -> "CoefficientField":
        """u(n) = amplitude * exp(-decay |n|_1) on the l1 ball of the given radius."""
        box = LatticeBox(radius, omega.nu)
        arr = np.where(box.mask, amplitude * np.exp(-decay * box.norms), 0.0)
        return cls(omega, arr, real=float(np.imag(amplitude)) == 0.0)

    # structure

    @property
    def nu(self) -> int:
        return self.omega.nu

    @property
    def radius(self) -> int:
        return (self.data.shape[0] - 1) // 2

    @property
    def box(self) -> LatticeBox:
        return LatticeBox(self.radius, self.nu)

    def __getitem__(self, n: Sequence[int]) -> complex:
        idx = as_index(n, self.nu)
        r = self.radius
        if any(abs(c) > r for c in idx):
            return 0j
        return complex(self.data[tuple(c + r for c in idx)])

    def items(self) -> Iterator[tuple[MultiIndex, complex]]:
        """Nonzero coefficients in enumeration order."""
        r = self.radius
        for pos in zip(*np.nonzero(self.data)):
            yield tuple(int(c) - r for c in pos), complex(self.data[pos])

    def support_radius(self) -> int:
        """Largest |n|_1 over nonzero coefficients (0 for the zero field)."""
        nz = self.box.norms[self.data != 0]
        return int(nz.max()) if nz.size else 0

    def resized(self, radius: int) -> "CoefficientField":
        """Pad with zeros or crop the hypercube; cropping keeps |n|_inf <= radius."""
        r = self.radius
        if radius == r:
            return self
        if radius > r:
            pad = radius - r
            arr = np.pad(self.data, pad)
        else:
            cut = r - radius
            arr = self.data[(slice(cut, cut + 2 * radius + 1),) * self.nu]
        return CoefficientField(self.omega, arr, real=self.real, check=False)

    def truncate(self, N: int) -> "CoefficientField":
        """Drop every coefficient with |n|_1 > N."""
        out = self.resized(N)
        box = LatticeBox(N, self.nu)
        return CoefficientField(self.omega, np.where(box.mask, out.data, 0), real=self.real, check=False)

    def outside_mass(self, N: int) -> float:
        """Sum of |u(n)| over |n|_1 > N."""
        return float(ordered_sum(np.where(self.box.norms > N, np.abs(self.data), 0.0)))

    # arithmetic

    def _aligned(self, other: "CoefficientField") -> tuple[np.ndarray, np.ndarray]:
        _check_omega(self, other)
        r = max(self.radius, other.radius)
        return self.resized(r).data, other.resized(r).data

    def __add__(self, other):
        if isinstance(other, CoefficientField):
            a, b = self._aligned(other)
            return CoefficientField(self.omega, a + b, real=self.real and other.real, check=False)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, CoefficientField):
            a, b = self._aligned(other)
            return CoefficientField(self.omega, a - b, real=self.real and other.real, check=False)
        return NotImplemented

    def __neg__(self):
        return CoefficientField(self.omega, -self.data, real=self.real, check=False)

    def __mul__(self, other):
        if isinstance(other, CoefficientField):
            return multiply(self, other)
        if np.isscalar(other):
            c = complex(other)
            return CoefficientField(self.omega, c * self.data, real=self.real and c.imag == 0, check=False)
        return NotImplemented

    __rmul__ = __mul__

    def max_abs_diff(self, other: "CoefficientField") -> float:
        a, b = self._aligned(other)
        return float(np.max(np.abs(a - b)))

    def __repr__(self) -> str:
        nnz = int(np.count_nonzero(self.data))
        return f"CoefficientField(nu={self.nu}, radius={self.radius}, nnz={nnz}, real={self.real})"

    # serialization

    def to_json_dict(self) -> dict:
        return {
            "omega": self.omega.to_list(),
            "entries": [{"n": list(n), "re": v.real, "im": v.imag} for n, v in self.items()],
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping, real: bool = False) -> "CoefficientField":
        omega = FrequencyVector(tuple(obj["omega"]))
        entries = [(e["n"], complex(e.get("re", 0.0), e.get("im", 0.0))) for e in obj["entries"]]
        return cls.from_entries(omega, entries, real=real)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())


def _check_omega(u: CoefficientField, v: CoefficientField) -> None:
    if u.omega != v.omega:
        raise FrequencyMismatchError(f"frequency vectors differ: {u.omega.entries} vs {v.omega.entries}")


def realness_defect(u: CoefficientField) -> float:
    """max_n |u(-n) - conj(u(n))|."""
    if u.data.size == 0:
        return 0.0
    return float(np.max(np.abs(np.flip(u.data) - np.conj(u.data))))


@dataclass(frozen=True)
class WeightSpec:
    """Submultiplicative weight lambda(|n|) for weighted Wiener norms.

    Build with :meth:`exponential`, :meth:`wiener`, :meth:`closed_form` or
    :meth:`from_samples`.  Admissibility is checked on m = 0..64.
    """

    kind: str
    k: float | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None
    samples: tuple[float, ...] | None = None

    GRID = 64

    def __post_init__(self):
        m = np.arange(self.GRID + 1)
        if self.samples is not None:
            m = m[: len(self.samples)]
        lam = self(m)
        if not np.all(np.isfinite(lam)) or np.min(lam) <= 0:
            raise ValueError("weight must be finite and bounded away from zero")
        if np.any(np.diff(lam) < -1e-12 * lam[1:]):
            raise ValueError("weight must be nondecreasing")
        q, r = np.meshgrid(m, m, indexing="ij")
        ok = q + r <= m[-1]
        lhs = lam[np.where(ok, q + r, 0)]
        with np.errstate(over="ignore"):
            rhs = lam[q] * lam[r]
        if np.any(ok & (lhs > rhs * (1 + 1e-12))):
            raise ValueError("weight must be submultiplicative")

    @classmethod
    def exponential(cls, k: float) -> "WeightSpec":
        if k <= 0:
            raise ValueError("exponential weight needs k > 0")
        return cls("exponential", k=float(k))

    @classmethod
    def wiener(cls) -> "WeightSpec":
        return cls("wiener")

    @classmethod
    def closed_form(cls, func: Callable[[np.ndarray], np.ndarray]) -> "WeightSpec":
        return cls("closed_form", func=func)

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "WeightSpec":
        return cls("samples", samples=tuple(float(s) for s in samples))

    def __call__(self, m) -> np.ndarray:
        m = np.asarray(m)
        if self.kind == "exponential":
            return np.exp(self.k * m)
        if self.kind == "wiener":
            return np.ones(m.shape)
        if self.kind == "closed_form":
            return np.asarray(self.func(m.astype(float)), dtype=float)
        table = np.asarray(self.samples)
        if np.any(m >= len(table)):
            raise ValueError(f"weight sampled only up to |n| = {len(table) - 1}")
        return table[m]


def norm_vk(u: CoefficientField, k: float) -> float:
    """sum_n |u(n)| exp(k |n|)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    nz = u.data != 0
    return float(ordered_sum(np.where(nz, np.abs(u.data) * np.exp(np.where(nz, k * u.box.norms, 0.0)), 0.0)))


def norm_weighted(u: CoefficientField, w: WeightSpec) -> float:
    weights = w(u.box.norms)
    return float(ordered_sum(np.where(u.data != 0, np.abs(u.data) * weights, 0.0)))


def prune(u: CoefficientField, threshold: float) -> CoefficientField:
    """Zero coefficients with |u(n)| <= threshold and shrink to the remaining support."""
    if threshold <= 0:
        return u
    arr = np.where(np.abs(u.data) > threshold, u.data, 0)
    out = CoefficientField(u.omega, arr, real=u.real, check=False)
    return out.resized(max(out.support_radius(), 0)) if np.any(arr) else CoefficientField.zeros(u.omega)


def multiply(u: CoefficientField, v: CoefficientField, prune_below: float = 0.0) -> CoefficientField:
    """Full discrete convolution of coefficients; the radius of the result is the sum of radii."""
    _check_omega(u, v)
    out = signal.convolve(u.data, v.data, mode="full", method="direct")
    w = CoefficientField(u.omega, out, real=u.real and v.real, check=False)
    return prune(w, prune_below)


def power(u: CoefficientField, p_plus_1: int, prune_below: float = 0.0) -> CoefficientField:
    if p_plus_1 < 1:
        raise ValueError("power needs an exponent >= 1")
    out = u
    for _ in range(p_plus_1 - 1):
        out = multiply(out, u, prune_below)
    return out


def differentiate(u: CoefficientField) -> CoefficientField:
    """Coefficientwise multiplication by i <omega, n>."""
    xi = u.box.frequencies(u.omega)
    return CoefficientField(u.omega, 1j * xi * u.data, real=u.real, check=False)


def apply_multiplier(u: CoefficientField, m: SymbolSpec) -> CoefficientField:
    """u(n) -> m(<omega, n>) u(n)."""
    xi = u.box.frequencies(u.omega)
    return CoefficientField(u.omega, m(xi) * u.data, real=u.real and m.claims_symmetry, check=False)


def conjugate(u: CoefficientField) -> CoefficientField:
    """Coefficients of the complex conjugate function: n -> conj(u(-n))."""
    return CoefficientField(u.omega, np.conj(np.flip(u.data)), real=u.real, check=False)


def evaluate(u: CoefficientField, x):
    """Point values sum_n u(n) exp(i <omega, n> x); accepts a scalar or an array of x."""
    xi = np.ravel(u.box.frequencies(u.omega))
    coeffs = np.ravel(u.data)
    keep = coeffs != 0
    xi, coeffs = xi[keep], coeffs[keep]
    xs = np.asarray(x, dtype=float)
    vals = np.array([ordered_sum(coeffs * np.exp(1j * xi * xv)) if coeffs.size else 0j for xv in np.ravel(xs)])
    return complex(vals[0]) if xs.ndim == 0 else vals.reshape(xs.shape)


def translate(u: CoefficientField, x0: float) -> CoefficientField:
    """Coefficients of u(x + x0)."""
    xi = u.box.frequencies(u.omega)
    return CoefficientField(u.omega, np.exp(1j * xi * x0) * u.data, real=u.real, check=False)


def derivative_bound_constant(omega: FrequencyVector, eps: float, kappa: float) -> float:
    """|omega| * max over integers t >= 0 of t exp((eps - kappa) t), for eps < kappa."""
    if not eps < kappa:
        raise ValueError("need eps < kappa")
    rate = kappa - eps
    t_star = 1.0 / rate
    cands = {max(0, math.floor(t_star)), math.ceil(t_star)}
    return omega.norm * max(t * math.exp(-rate * t) for t in cands)
