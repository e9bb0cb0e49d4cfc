"""Equation presets: a dispersion symbol paired with a nonlinearity.

Every model is written as u_t + L u + N(u) = 0, and :func:`nonlinear_term`
returns the coefficients of N(u):

* ``power_deriv``  N = d/dx (u^(p+1))                 (gKdV, gBO)
* ``poly_deriv``   N = d/dx P(u, conj u)               (dNLS with P = u^2 conj u)
* ``nls_power``    N = sign * i |u|^(2p) u             (NLS, no derivative)
* ``bbm_power``    N = -B (u + u^(p+1)),  B = -d/dx / (1 - d^2/dx^2)   (gBBM, L = 0)
"""
from __future__ import annotations

from dataclasses import dataclass

from . import qpfield as qf
from .qpfield import CoefficientField
from .symbols import SymbolSpec, builtin

KINDS = ("power_deriv", "poly_deriv", "nls_power", "bbm_power")
EQUATIONS = ("gkdv", "gbo", "dnls", "nls", "gbbm")


@dataclass(frozen=True)
class Monomial:
    """coeff * u^a * conj(u)^b"""

    a: int
    b: int
    coeff: complex = 1.0

    @property
    def degree(self) -> int:
        return self.a + self.b


@dataclass(frozen=True)
class Nonlinearity:
    kind: str
    p: int = 1
    monomials: tuple[Monomial, ...] = ()
    sign: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "poly_deriv":
            if not self.monomials or self.degree < 1:
                raise ValueError("poly_deriv needs a polynomial of degree >= 1")
        elif self.p < 1:
            raise ValueError("power p must be a positive integer")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def power_deriv(cls, p: int) -> "Nonlinearity":
        return cls("power_deriv", p=p)

    @classmethod
    def poly_deriv(cls, monomials) -> "Nonlinearity":
        monos = tuple(m if isinstance(m, Monomial) else Monomial(*m) for m in monomials)
        return cls("poly_deriv", monomials=monos)

    @classmethod
    def nls_power(cls, p: int, sign: int = 1) -> "Nonlinearity":
        return cls("nls_power", p=p, sign=sign)

    @classmethod
    def bbm_power(cls, p: int) -> "Nonlinearity":
        return cls("bbm_power", p=p)

    @property
    def degree(self) -> int:
        if self.kind == "poly_deriv":
            return max(m.degree for m in self.monomials)
        if self.kind == "nls_power":
            return 2 * self.p + 1
        return self.p + 1

    @property
    def has_derivative(self) -> bool:
        return self.kind in ("power_deriv", "poly_deriv")

    @property
    def preserves_realness(self) -> bool:
        if self.kind == "poly_deriv":
            return all(complex(m.coeff).imag == 0 for m in self.monomials)
        return self.kind in ("power_deriv", "bbm_power")


@dataclass(frozen=True)
class ModelSpec:
    name: str
    symbol: SymbolSpec
    nonlinearity: Nonlinearity
    real_valued: bool = False

    def __post_init__(self):
        if self.real_valued and not (self.symbol.claims_symmetry and self.nonlinearity.preserves_realness):
            raise ValueError(f"model {self.name!r} cannot be real-valued: symbol or nonlinearity breaks realness")

    @property
    def has_derivative(self) -> bool:
        return self.nonlinearity.has_derivative

    def linear_only(self) -> "ModelSpec":
        """Same symbol; the nonlinearity is replaced by the zero polynomial."""
        return ModelSpec(
            f"{self.name}-linear", self.symbol, Nonlinearity.poly_deriv([Monomial(1, 0, 0.0)]), self.real_valued
        )

    def describe(self) -> dict:
        nl = self.nonlinearity
        out = {"name": self.name, "symbol": self.symbol.name, "kind": nl.kind, "real_valued": self.real_valued}
        if nl.kind == "poly_deriv":
            out["monomials"] = [[m.a, m.b, complex(m.coeff).real, complex(m.coeff).imag] for m in nl.monomials]
        else:
            out["p"] = nl.p
        if nl.kind == "nls_power":
            out["sign"] = nl.sign
        return out


def build_model(equation: str, p: int = 1, nls_sign: int = 1, real_valued: bool | None = None) -> ModelSpec:
    """Preset for one of gkdv, gbo, dnls, nls, gbbm.

    ``real_valued`` defaults to True for gkdv, gbo and gbbm.
    """
    if equation == "gkdv":
        sym, nl = builtin("kdv"), Nonlinearity.power_deriv(p)
    elif equation == "gbo":
        sym, nl = builtin("gbo"), Nonlinearity.power_deriv(p)
    elif equation == "dnls":
        sym, nl = builtin("dnls"), Nonlinearity.poly_deriv([Monomial(2, 1, 1.0)])
    elif equation == "nls":
        sym, nl = builtin("nls_free"), Nonlinearity.nls_power(p, nls_sign)
    elif equation == "gbbm":
        sym, nl = builtin("zero"), Nonlinearity.bbm_power(p)
    else:
        raise ValueError(f"unknown equation {equation!r}; choose from {EQUATIONS}")
    if real_valued is None:
        real_valued = equation in ("gkdv", "gbo", "gbbm")
    return ModelSpec(equation, sym, nl, real_valued)


def _poly(u: CoefficientField, monomials) -> CoefficientField:
    ubar = qf.conjugate(u)
    acc = None
    for mono in monomials:
        if mono.degree == 0:
            term = CoefficientField.from_entries(u.omega, {(0,) * u.nu: 1.0}, real=True)
        elif mono.a == 0:
            term = qf.power(ubar, mono.b)
        elif mono.b == 0:
            term = qf.power(u, mono.a)
        else:
            term = qf.multiply(qf.power(u, mono.a), qf.power(ubar, mono.b))
        term = term * complex(mono.coeff)
        acc = term if acc is None else acc + term
    return acc


def nonlinear_term(model: ModelSpec, u: CoefficientField) -> CoefficientField:
    """Coefficients of N(u); no truncation is applied."""
    nl = model.nonlinearity
    if nl.kind == "power_deriv":
        out = qf.differentiate(qf.power(u, nl.p + 1))
    elif nl.kind == "poly_deriv":
        out = qf.differentiate(_poly(u, nl.monomials))
    elif nl.kind == "nls_power":
        mod2p = qf.multiply(qf.power(u, nl.p), qf.power(qf.conjugate(u), nl.p))
        out = qf.multiply(mod2p, u) * (nl.sign * 1j)
    else:
        s = u + qf.power(u, nl.p + 1)
        out = -qf.apply_multiplier(s, builtin("bbm_rational"))
    real = u.real and nl.preserves_realness
    return CoefficientField(out.omega, out.data, real=real, check=False)


def norm_bound(model: ModelSpec, r: float) -> float:
    """Upper bound for the algebra norm of the undifferentiated nonlinearity at ||u|| <= r."""
    nl = model.nonlinearity
    if nl.kind == "power_deriv":
        return r ** (nl.p + 1)
    if nl.kind == "poly_deriv":
        return sum(abs(complex(m.coeff)) * r**m.degree for m in nl.monomials)
    if nl.kind == "nls_power":
        return r ** (2 * nl.p + 1)
    return 0.5 * (r + r ** (nl.p + 1))


def lipschitz_bound(model: ModelSpec, ru: float, rv: float) -> float:
    """Factor multiplying ||u - v|| in the algebra-norm Lipschitz estimate.

    power_deriv: (ru + rv)^p from telescoping; poly_deriv: C_P (1 + ru + rv)^(deg P - 1)
    with C_P = sum |c| * deg; nls_power: (ru + rv)^(2p); bbm_power: (1 + (ru + rv)^p) / 2.
    """
    if ru < 0 or rv < 0:
        raise ValueError("radii must be nonnegative")
    nl = model.nonlinearity
    s = ru + rv
    if nl.kind == "power_deriv":
        return s**nl.p
    if nl.kind == "poly_deriv":
        c_p = sum(abs(complex(m.coeff)) * m.degree for m in nl.monomials)
        return c_p * (1.0 + s) ** (nl.degree - 1)
    if nl.kind == "nls_power":
        return s ** (2 * nl.p)
    return 0.5 * (1.0 + s**nl.p)
