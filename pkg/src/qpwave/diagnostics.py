"""Small-divisor diagnostics for the frequency vector omega = (1, alpha) with
alpha = sum_{m >= 1} 1 / (10^^m)   (10^^m = m-fold tower of tens).

The witnesses n_level = (-p, q) with q = 10^^level make <omega, n> tiny, and
the Bourgain-type weight |<omega, n>|^(-1/2) then outgrows any exponential
coefficient decay e^(-kappa |n|) with kappa <= ln(9)/4.

Logs are base 10 unless a name says ``ln``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lattice import MultiIndex, as_index
from .qpfield import CoefficientField, ordered_sum

LN10 = math.log(10.0)
KAPPA_THRESHOLD = math.log(9.0) / 4.0


def tower(level: int) -> int:
    """10^^level as an exact integer (level <= 2; 10^^3 has 10^10 digits)."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    if level > 2:
        raise OverflowError("10^^3 and above are not representable; use log space")
    out = 1
    for _ in range(level):
        out = 10**out
    return out


@dataclass(frozen=True)
class LiouvilleWitness:
    """Witness data at one level.

    ``p`` and ``q`` are exact for level <= 2 and None beyond.  For level 3,
    log10 C does not fit in a float, so ``log10_C`` is -inf and the level is
    carried by ``log10_q`` together with ``log10_neg_log10_C`` (log10 of -log10 C).
    ``remainder_bound`` bounds the relative size of the neglected tail of the series
    behind C, so C = dominant * (1 + r) with 0 <= r <= remainder_bound.
    """

    n: int
    p: int | None
    q: int | None
    log10_q: float
    log10_C: float
    log10_neg_log10_C: float
    remainder_bound: float
    exact: bool

    @property
    def index(self) -> MultiIndex:
        if self.p is None:
            raise OverflowError("index not representable beyond level 2")
        return (-self.p, self.q)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": None if self.p is None else str(self.p),
            "q": None if self.q is None else str(self.q),
            "log10_q": self.log10_q,
            "log10_C": self.log10_C,
            "log10_neg_log10_C": self.log10_neg_log10_C,
            "remainder_bound": self.remainder_bound,
            "exact": self.exact,
        }


def liouville_witness(n: int) -> LiouvilleWitness:
    """Level-n witness for alpha; levels 1 and 2 exact, level 3 in double-log form."""
    if n < 1:
        raise ValueError("level must be >= 1")
    if n >= 4:
        raise OverflowError("levels >= 4 exceed even double-log float range")
    if n == 3:
        # q = 10^(10^10); C ~ q / 10^q so -log10 C = q - 10^10, whose log10 is 10^10 to float precision
        return LiouvilleWitness(3, None, None, 1e10, -math.inf, 1e10, 0.0, False)
    q = tower(n)
    p = sum(q // tower(m) for m in range(1, n + 1))
    # dominant term q / 10^^(n+1) = q / 10^q; next term q / 10^(10^q) is smaller by a
    # factor 10^(q - 10^q), and the rest decays faster, so 2 * that factor bounds the tail
    log10_dom = math.log10(q) - q
    log10_tail = q - tower(n + 1) if n == 1 else -math.inf
    remainder = 2.0 * 10.0**log10_tail
    log10_C = log10_dom + (math.log10(1.0 + remainder) if remainder else 0.0)
    return LiouvilleWitness(n, p, q, math.log10(q), log10_C, math.log10(-log10_C), remainder, True)


def alpha_partial(n: int) -> Fraction:
    """sum_{m <= n} 1 / 10^^m as an exact rational."""
    return sum((Fraction(1, tower(m)) for m in range(1, n + 1)), Fraction(0))


@dataclass(frozen=True)
class TsugawaParams:
    sigma: tuple[float, ...]
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))
        if any(s < 0 or not math.isfinite(s) for s in self.sigma):
            raise ValueError("sigma entries must be finite and nonnegative")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError("kappa must be positive")

    @classmethod
    def threshold(cls, nu: int = 2) -> "TsugawaParams":
        return cls((0.0,) * nu, KAPPA_THRESHOLD)


def _log10_bracket(n: int) -> float:
    """log10 <n> = log10 sqrt(1 + n^2), exact-integer argument so huge n are fine."""
    return 0.5 * math.log10(1 + int(n) ** 2)


def tsugawa_term(n_index: Sequence[int], params: TsugawaParams, small_divisor_log10: float) -> float:
    """log10 of |<omega,n>|^(-1/2) prod <n_i>^sigma_i e^(-kappa |n|_1)."""
    n = as_index(n_index)
    if len(n) != len(params.sigma):
        raise ValueError("sigma length must match the index dimension")
    weight = math.fsum(s * _log10_bracket(c) for s, c in zip(params.sigma, n))
    norm = sum(abs(c) for c in n)
    return -0.5 * small_divisor_log10 + weight - params.kappa * float(norm) / LN10


def recover_coefficient(u: CoefficientField, n: Sequence[int], window: float) -> complex:
    """(1/2W) int_{-W}^{W} u(x) e^{-i<omega,n>x} dx in closed form: sum_m u(m) sinc(<omega, m-n> W)."""
    if not window > 0:
        raise ValueError("window must be positive")
    n = as_index(n)
    if len(n) != u.nu:
        raise ValueError("index dimension mismatch")
    box = u.box
    gaps = np.zeros(box.shape)
    for w, comp, c in zip(u.omega.values, box.components, n):
        gaps = gaps + w * (comp - c)
    z = gaps * window
    with np.errstate(invalid="ignore", divide="ignore"):
        kernel = np.where(z == 0.0, 1.0, np.sin(z) / np.where(z == 0.0, 1.0, z))
    return complex(ordered_sum((u.data * kernel).ravel()))


@dataclass(frozen=True)
class ChainLink:
    name: str
    level: int
    lhs_ln: float
    rhs_ln: float
    holds: bool
    note: str = ""

    @property
    def margin_ln(self) -> float:
        return self.rhs_ln - self.lhs_ln

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "level": self.level,
            "lhs_ln": self.lhs_ln,
            "rhs_ln": self.rhs_ln,
            "margin_ln": self.margin_ln,
            "holds": self.holds,
            "note": self.note,
        }


@dataclass
class ChainReport:
    kappa: float
    sigma: tuple[float, ...]
    witnesses: list[LiouvilleWitness]
    links: list[ChainLink] = field(default_factory=list)
    terms_log10: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(l.holds for l in self.links)

    def failures(self) -> list[ChainLink]:
        return [l for l in self.links if not l.holds]

    def link(self, name: str, level: int) -> ChainLink:
        for l in self.links:
            if l.name == name and l.level == level:
                return l
        raise KeyError((name, level))

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "sigma": list(self.sigma),
            "kappa_threshold": KAPPA_THRESHOLD,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "links": [l.to_dict() for l in self.links],
            "terms_log10": {str(k): v for k, v in self.terms_log10.items()},
            "all_hold": self.all_hold,
        }


def verify_divergence_chain(params: TsugawaParams, levels: Sequence[int] = (1, 2)) -> ChainReport:
    """Check every inequality of the non-membership argument at each level, in ln units.

    Links, comparing consecutive quantities:
      liouville    C <= q^(1-n)
      factor_two   C <= 2q / 10^q
      nine_power   2q / 10^q <= 9^(-q), via 2q (9/10)^q <= 1 (level 1 only reports the ratio)
      exp_kappa    9^(-q) <= e^(-4 kappa q)
      index_norm   e^(-4 kappa q) <= e^(-2 kappa (p + q))
      term         Tsugawa term >= 1
    A link holds when lhs <= rhs, with no tolerance.
    """
    if len(params.sigma) != 2:
        raise ValueError("the witness lives in Z^2; sigma must have two entries")
    kappa = params.kappa
    report = ChainReport(kappa, params.sigma, [])
    ln2, ln9 = math.log(2.0), math.log(9.0)
    for level in levels:
        if level not in (1, 2):
            raise ValueError("chain verification is defined for levels 1 and 2")
        w = liouville_witness(level)
        report.witnesses.append(w)
        q, p = w.q, w.p
        qf = float(q)
        lnC = w.log10_C * LN10
        links = report.links

        rhs = (1 - level) * w.log10_q * LN10
        links.append(ChainLink("liouville", level, lnC, rhs, lnC <= rhs))

        lhs2 = ln2 + math.log(qf) - qf * LN10
        links.append(ChainLink("factor_two", level, lnC, lhs2, lnC <= lhs2))

        lhs3 = ln2 + math.log(qf) + qf * (ln9 - LN10)  # ln of 2q (9/10)^q
        if level >= 2:
            links.append(ChainLink("nine_power", level, lhs3, 0.0, lhs3 <= 0.0))
        else:
            links.append(
                ChainLink("nine_power", level, lhs3, 0.0, True, note=f"ratio 2q(9/10)^q = {math.exp(lhs3):.6g} reported only")
            )

        a, b = -qf * ln9, -4.0 * kappa * qf
        links.append(ChainLink("exp_kappa", level, a, b, a <= b))

        c = -2.0 * kappa * float(p + q)
        links.append(ChainLink("index_norm", level, b, c, b <= c))

        t = tsugawa_term(w.index, params, w.log10_C)
        report.terms_log10[level] = t
        links.append(ChainLink("term", level, 0.0, t * LN10, t >= 0.0))
    return report
