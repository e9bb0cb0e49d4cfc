"""Dispersion symbols m(xi) = i * b(xi) with b real.

Storing only the real function b keeps Re m identically zero, so every
propagator exp(-t m) is an exact phase.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import FrequencyVector, LatticeBox, MultiIndex


class SymbolError(ValueError):
    pass


def _kdv(xi):
    # explicit products keep b(-xi) = -b(xi) bitwise; numpy's ** does not
    return -(xi * xi * xi)


def _gbo(xi):
    return -np.abs(xi) * xi


def _square(xi):
    return xi * xi


def _bbm(xi):
    return -xi / (1.0 + xi * xi)


def _zero(xi):
    return np.zeros_like(xi)


@dataclass(frozen=True)
class SymbolSpec:
    """A purely imaginary Fourier multiplier.

    ``imag_part`` maps real frequencies to b(xi); the symbol is m = i b.
    ``epsilon`` is the growth margin of the exponential growth bound;
    :func:`check_growth` falls back to k/2 when it is unset.
    """

    name: str
    imag_part: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    epsilon: float | None = None
    claims_symmetry: bool = False

    def imag(self, xi) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            b = np.asarray(self.imag_part(np.asarray(xi, dtype=float)), dtype=float)
        if not np.all(np.isfinite(b)):
            raise SymbolError(f"symbol {self.name!r} is not finite at some frequency")
        return b

    def __call__(self, xi) -> np.ndarray:
        b = self.imag(xi)
        out = np.empty(b.shape, dtype=complex)
        out.real = 0.0
        out.imag = b
        return out

    def phase(self, t: float, xi) -> np.ndarray:
        """exp(-t m(xi)) = cos(t b) - i sin(t b)."""
        tb = float(t) * self.imag(xi)
        out = np.empty(tb.shape, dtype=complex)
        out.real = np.cos(tb)
        out.imag = -np.sin(tb)
        return out

    def with_epsilon(self, epsilon: float) -> "SymbolSpec":
        return SymbolSpec(self.name, self.imag_part, float(epsilon), self.claims_symmetry)


_BUILTINS = {
    "kdv": (_kdv, True),
    "gbo": (_gbo, True),
    "dnls": (_square, False),
    "nls_free": (_square, False),
    "bbm_rational": (_bbm, True),
    "zero": (_zero, True),
}


def builtin(name: str, epsilon: float | None = None) -> SymbolSpec:
    """kdv: -i xi^3, gbo: -i|xi|xi, dnls and nls_free: i xi^2, bbm_rational: -i xi/(1+xi^2)."""
    try:
        fn, sym = _BUILTINS[name]
    except KeyError:
        raise SymbolError(f"unknown symbol {name!r}; choose from {sorted(_BUILTINS)}") from None
    return SymbolSpec(name, fn, epsilon, sym)


def polynomial_symbol(
    odd: Sequence[float] = (), even: Sequence[float] = (), name: str = "custom", epsilon: float | None = None
) -> SymbolSpec:
    """m(xi) = i (sum_j odd[j] xi^(2j+1) + sum_j even[j] xi^(2j)).

    The symmetry m(-xi) = conj(m(xi)) holds exactly when the even part vanishes.
    """
    odd_c = tuple(float(c) for c in odd)
    even_c = tuple(float(c) for c in even)

    def b(xi):
        sq = xi * xi
        acc = np.zeros_like(xi)
        even_pow = np.ones_like(xi)
        for j in range(max(len(odd_c), len(even_c))):
            if j < len(even_c):
                acc = acc + even_c[j] * even_pow
            if j < len(odd_c):
                acc = acc + odd_c[j] * (xi * even_pow)
            even_pow = even_pow * sq
        return acc

    return SymbolSpec(name, b, epsilon, not any(even_c))


@dataclass(frozen=True)
class GrowthReport:
    sup_value: float
    attained_at: MultiIndex
    frequency: float
    radius: int
    epsilon: float
    k: float

    def to_dict(self) -> dict:
        return {
            "sup_value": self.sup_value,
            "attained_at": list(self.attained_at),
            "frequency": self.frequency,
            "checked_radius": self.radius,
            "epsilon": self.epsilon,
            "k": self.k,
        }


def check_growth(
    m: SymbolSpec, omega: FrequencyVector, k: float, box: LatticeBox, epsilon: float | None = None
) -> GrowthReport:
    """Max of |m(xi)| exp(-((k - eps)/|omega|) |xi|) over the lattice frequencies of ``box``.

    Only realized frequencies are checked; the bound over all real xi is the
    caller's hypothesis.
    """
    eps = epsilon if epsilon is not None else (m.epsilon if m.epsilon is not None else k / 2)
    if not k > eps:
        raise ValueError(f"need k > epsilon, got k={k}, epsilon={eps}")
    xi = box.frequencies(omega)
    vals = np.abs(m.imag(xi)) * np.exp(-((k - eps) / omega.norm) * np.abs(xi))
    vals = np.where(box.mask, vals, -np.inf)
    pos = np.unravel_index(int(np.argmax(vals)), vals.shape)
    n = tuple(int(c) - box.radius for c in pos)
    return GrowthReport(float(vals[pos]), n, float(xi[pos]), box.radius, float(eps), float(k))


def check_symmetry(m: SymbolSpec, frequencies: Sequence[float], atol: float = 1e-14) -> bool:
    """True iff m(-xi) = conj(m(xi)) at every sample."""
    xi = np.asarray(frequencies, dtype=float)
    return bool(np.all(np.abs(m(-xi) - np.conj(m(xi))) <= atol))


def is_purely_imaginary(m: SymbolSpec, frequencies: Sequence[float]) -> bool:
    return bool(np.all(m(np.asarray(frequencies, dtype=float)).real == 0.0))


def propagator_modulus_defect(m: SymbolSpec, t: float, frequencies: Sequence[float]) -> float:
    return float(np.max(np.abs(np.abs(m.phase(t, frequencies)) - 1.0)))
