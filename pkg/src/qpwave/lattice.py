"""Multi-index bookkeeping on truncated lattices in Z^nu.

Index norms are l1 on Z^nu, frequency-vector norms are l-infinity on R^nu,
so that |<omega, n>| <= |omega| |n| holds with constant one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

MultiIndex = tuple[int, ...]


class DimensionError(ValueError):
    """A multi-index and a frequency vector disagree on nu."""


@dataclass(frozen=True)
class FrequencyVector:
    """Base frequencies omega = (omega_1, ..., omega_nu).

    Entries may be floats or ``fractions.Fraction``; the latter enable the
    cancellation-free :func:`frequency_exact`.  Rational independence is an
    assumption of the caller and is never checked.
    """

    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("a frequency vector needs at least one entry")
        for e in entries:
            v = float(e)
            if not math.isfinite(v) or v == 0.0:
                raise ValueError(f"frequency entries must be finite and nonzero, got {e!r}")
        object.__setattr__(self, "entries", entries)

    @property
    def nu(self) -> int:
        return len(self.entries)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([float(e) for e in self.entries])

    @property
    def norm(self) -> float:
        """|omega| as the max-absolute entry."""
        return float(np.max(np.abs(self.values)))

    def to_list(self) -> list[float]:
        return [float(e) for e in self.entries]


def as_index(n: Iterable[int], nu: int | None = None) -> MultiIndex:
    idx = tuple(int(c) for c in n)
    if nu is not None and len(idx) != nu:
        raise DimensionError(f"multi-index {idx} has length {len(idx)}, expected {nu}")
    return idx


def frequency(omega: FrequencyVector, n: Sequence[int]) -> float:
    """<omega, n>, accumulated in index order 1..nu."""
    idx = as_index(n, omega.nu)
    acc = 0.0
    for w, c in zip(omega.values, idx):
        acc = acc + float(w) * c
    return acc


def frequency_exact(omega: FrequencyVector, n: Sequence[int]) -> Fraction:
    """<omega, n> in exact rational arithmetic (floats are taken at their binary value)."""
    idx = as_index(n, omega.nu)
    return sum((Fraction(w) * c for w, c in zip(omega.entries, idx)), Fraction(0))


def index_norm(n: Sequence[int]) -> int:
    return sum(abs(int(c)) for c in n)


def enumerate_box(N: int, nu: int) -> list[MultiIndex]:
    """All n with |n|_1 <= N in lexicographic order."""
    if N < 0:
        raise ValueError("box radius must be nonnegative")
    return [n for n in itertools.product(range(-N, N + 1), repeat=nu) if index_norm(n) <= N]


def box_cardinality(N: int, nu: int) -> int:
    """Closed-form size of the l1 ball of radius N in Z^nu."""
    return sum(2**j * math.comb(nu, j) * math.comb(N, j) for j in range(min(nu, N) + 1))


@dataclass(frozen=True)
class LatticeBox:
    """The l1 ball |n|_1 <= radius, embedded in the hypercube [-radius, radius]^nu.

    Dense arrays over the hypercube are the storage layout of every field in
    the package; C order on that array is lexicographic order on indices.
    """

    radius: int
    nu: int

    def __post_init__(self):
        if self.radius < 0 or self.nu < 1:
            raise ValueError("need radius >= 0 and nu >= 1")

    @property
    def shape(self) -> tuple[int, ...]:
        return (2 * self.radius + 1,) * self.nu

    @cached_property
    def components(self) -> tuple[np.ndarray, ...]:
        grids = np.indices(self.shape) - self.radius
        return tuple(grids[i] for i in range(self.nu))

    @cached_property
    def norms(self) -> np.ndarray:
        """|n|_1 at every hypercube site."""
        out = np.zeros(self.shape, dtype=np.int64)
        for comp in self.components:
            out = out + np.abs(comp)
        return out

    @cached_property
    def mask(self) -> np.ndarray:
        return self.norms <= self.radius

    def indices(self) -> list[MultiIndex]:
        return enumerate_box(self.radius, self.nu)

    def __len__(self) -> int:
        return box_cardinality(self.radius, self.nu)

    def frequencies(self, omega: FrequencyVector) -> np.ndarray:
        """<omega, n> at every hypercube site, same summation order as :func:`frequency`."""
        if omega.nu != self.nu:
            raise DimensionError(f"box has nu={self.nu}, omega has nu={omega.nu}")
        acc = np.zeros(self.shape)
        for w, comp in zip(omega.values, self.components):
            acc = acc + float(w) * comp
        return acc

    def slot(self, n: Sequence[int]) -> tuple[int, ...]:
        """Array position of multi-index n."""
        idx = as_index(n, self.nu)
        return tuple(c + self.radius for c in idx)
