"""Shared builders for the test suite."""
from __future__ import annotations

import os

import numpy as np

from qpwave.lattice import FrequencyVector, LatticeBox
from qpwave.qpfield import CoefficientField

SEED = int(os.environ.get("QPWAVE_SEED", "20240611"))

DESK_OMEGA = FrequencyVector((1.0,))
DESK = dict(R=0.6, k=1.0, kappa=0.5, epsilon=0.25, N=8, M=32)

# criterion number -> (passed, detail), filled by the acceptance module
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def rng(offset: int = 0) -> np.random.Generator:
    return np.random.default_rng(SEED + offset)


def desk_data(mean: float = 0.0) -> CoefficientField:
    entries = {(1,): 0.1, (-1,): 0.1}
    if mean:
        entries[(0,)] = mean
    return CoefficientField.from_entries(DESK_OMEGA, entries, real=True, radius=DESK["N"])


def random_field(
    gen: np.random.Generator,
    omega: FrequencyVector,
    N: int,
    decay: float = 0.5,
    real: bool = False,
    scale: float = 1.0,
    density: float = 1.0,
) -> CoefficientField:
    """Random coefficients on |n|_1 <= N with |u(n)| ~ scale * exp(-decay |n|)."""
    box = LatticeBox(N, omega.nu)
    raw = gen.normal(size=box.shape) + 1j * gen.normal(size=box.shape)
    keep = box.mask & (gen.random(box.shape) < density)
    data = np.where(keep, scale * raw * np.exp(-decay * box.norms), 0.0)
    if real:
        data = 0.5 * (data + np.conj(np.flip(data)))
    return CoefficientField(omega, data, real=real)


def random_omega(gen: np.random.Generator, nu: int) -> FrequencyVector:
    return FrequencyVector(tuple([1.0] + list(gen.uniform(0.3, 2.0, size=nu - 1))))


def brute_convolution(u: CoefficientField, v: CoefficientField) -> dict:
    """Dict-of-indices convolution, independent of the array kernel."""
    out: dict = {}
    for a, x in u.items():
        for b, y in v.items():
            n = tuple(i + j for i, j in zip(a, b))
            out[n] = out.get(n, 0) + x * y
    return out
