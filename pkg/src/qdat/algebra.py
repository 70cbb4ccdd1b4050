"""Exact algebra of propagator kernels.

Every kernel used by the package is a complex linear combination of four
basis kernels: the retarded and advanced parts of the positive- and
negative-frequency components,

    R+ = D_ret^+,   R- = D_ret^-,   A+ = D_adv^+,   A- = D_adv^-.

Coefficients are exact (pairs of :class:`fractions.Fraction`), so identities
between kernels are decided by equality, never by a tolerance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterator, Mapping, Union

__all__ = [
    "BasisKernel",
    "ExactComplex",
    "KernelExpr",
    "KERNEL_NAMES",
    "I",
    "HALF",
    "canonical",
    "combine",
    "reflect",
    "IdentityResult",
    "verify_identity_suite",
]


class CausalPart(enum.Enum):
    RETARDED = "ret"
    ADVANCED = "adv"


class FrequencyPart(enum.Enum):
    POSITIVE = "+"
    NEGATIVE = "-"


class BasisKernel(enum.Enum):
    """The four basis kernels, ordered R+, R-, A+, A-."""

    R_PLUS = (CausalPart.RETARDED, FrequencyPart.POSITIVE)
    R_MINUS = (CausalPart.RETARDED, FrequencyPart.NEGATIVE)
    A_PLUS = (CausalPart.ADVANCED, FrequencyPart.POSITIVE)
    A_MINUS = (CausalPart.ADVANCED, FrequencyPart.NEGATIVE)

    @property
    def causal_part(self) -> CausalPart:
        return self.value[0]

    @property
    def frequency_part(self) -> FrequencyPart:
        return self.value[1]

    @property
    def symbol(self) -> str:
        head = "R" if self.causal_part is CausalPart.RETARDED else "A"
        return head + self.frequency_part.value

    def reflected(self) -> "BasisKernel":
        """Basis kernel obtained by reversing the argument, K(x) -> K(-x).

        Reversal swaps retarded with advanced and positive with negative
        frequency: R+ <-> A-, R- <-> A+.
        """
        return _REFLECTION[self]


_REFLECTION = {
    BasisKernel.R_PLUS: BasisKernel.A_MINUS,
    BasisKernel.A_MINUS: BasisKernel.R_PLUS,
    BasisKernel.R_MINUS: BasisKernel.A_PLUS,
    BasisKernel.A_PLUS: BasisKernel.R_MINUS,
}

_BASIS = tuple(BasisKernel)

Scalar = Union["ExactComplex", int, Fraction]


@dataclass(frozen=True)
class ExactComplex:
    """Complex number with rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, value) -> "ExactComplex":
        if isinstance(value, ExactComplex):
            return value
        if isinstance(value, (int, Rational)):
            return cls(Fraction(value))
        if isinstance(value, str):
            return cls.parse(value)
        raise TypeError(f"cannot use {value!r} as an exact complex number")

    @classmethod
    def parse(cls, text: str) -> "ExactComplex":
        """Parse ``"a"``, ``"a+bi"``, ``"-1/2i"`` style literals."""
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty complex literal")
        if not s.endswith("i"):
            return cls(Fraction(s))
        body = s[:-1]
        # split at the last sign that is not the leading one
        cut = max(body.rfind("+", 1), body.rfind("-", 1))
        if cut > 0 and body[cut - 1] not in "eE/":
            re_text, im_text = body[:cut], body[cut:]
        else:
            re_text, im_text = "0", body
        if im_text in ("", "+"):
            im_text = "1"
        elif im_text == "-":
            im_text = "-1"
        return cls(Fraction(re_text), Fraction(im_text))

    def __add__(self, other):
        try:
            o = ExactComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return ExactComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return ExactComplex(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            o = ExactComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return ExactComplex(self.re * o.re - self.im * o.im,
                            self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self) -> "ExactComplex":
        return ExactComplex(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            o = ExactComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    def __repr__(self):
        return f"ExactComplex({self})"


ZERO = ExactComplex()
ONE = ExactComplex(1)
I = ExactComplex(0, 1)
HALF = ExactComplex(Fraction(1, 2))


class KernelExpr:
    """Immutable exact linear combination of the four basis kernels.

    Absent basis kernels carry coefficient zero; equality compares all four
    coefficients.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coefficients: Mapping[BasisKernel, Scalar] | None = None):
        coefficients = dict(coefficients or {})
        unknown = set(coefficients) - set(_BASIS)
        if unknown:
            raise TypeError(f"not basis kernels: {unknown}")
        self._coeffs = tuple(ExactComplex.coerce(coefficients.get(b, 0)) for b in _BASIS)

    @classmethod
    def basis(cls, b: BasisKernel) -> "KernelExpr":
        return cls({b: 1})

    @classmethod
    def zero(cls) -> "KernelExpr":
        return cls()

    def __getitem__(self, b: BasisKernel) -> ExactComplex:
        return self._coeffs[_BASIS.index(b)]

    def items(self) -> Iterator[tuple[BasisKernel, ExactComplex]]:
        return zip(_BASIS, self._coeffs)

    def nonzero(self) -> dict[BasisKernel, ExactComplex]:
        return {b: c for b, c in self.items() if c}

    def is_zero(self) -> bool:
        return not any(self._coeffs)

    def __add__(self, other: "KernelExpr") -> "KernelExpr":
        if not isinstance(other, KernelExpr):
            return NotImplemented
        return KernelExpr({b: c + d for b, c, d in zip(_BASIS, self._coeffs, other._coeffs)})

    def __sub__(self, other: "KernelExpr") -> "KernelExpr":
        if not isinstance(other, KernelExpr):
            return NotImplemented
        return self + (-other)

    def __neg__(self) -> "KernelExpr":
        return KernelExpr({b: -c for b, c in self.items()})

    def __mul__(self, scalar) -> "KernelExpr":
        try:
            s = ExactComplex.coerce(scalar)
        except TypeError:
            return NotImplemented
        return KernelExpr({b: s * c for b, c in self.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, KernelExpr):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self):
        return hash(self._coeffs)

    def __repr__(self):
        if self.is_zero():
            return "KernelExpr(0)"
        terms = " + ".join(f"({c})*{b.symbol}" for b, c in self.items() if c)
        return f"KernelExpr({terms})"

    def to_dict(self) -> dict[str, str]:
        """Symbol -> coefficient string, zero coefficients omitted."""
        return {b.symbol: str(c) for b, c in self.items() if c}


R_PLUS = KernelExpr.basis(BasisKernel.R_PLUS)
R_MINUS = KernelExpr.basis(BasisKernel.R_MINUS)
A_PLUS = KernelExpr.basis(BasisKernel.A_PLUS)
A_MINUS = KernelExpr.basis(BasisKernel.A_MINUS)


def _build_named() -> dict[str, KernelExpr]:
    ret = R_PLUS + R_MINUS
    adv = A_PLUS + A_MINUS
    d_plus = R_PLUS - A_PLUS
    d_minus = R_MINUS - A_MINUS
    return {
        "ret": ret,
        "adv": adv,
        "bar": HALF * (ret + adv),
        "odd": ret - adv,
        "d_plus": d_plus,
        "d_minus": d_minus,
        "one": I * (d_plus - d_minus),
        "feynman": R_PLUS + A_MINUS,
        "dyson": A_PLUS + R_MINUS,
        # D+ = -i Delta+  and  D- = i Delta-
        "delta_plus": I * d_plus,
        "delta_minus": -I * d_minus,
    }


_NAMED = _build_named()
KERNEL_NAMES = tuple(_NAMED)


def canonical(name: str) -> KernelExpr:
    """Expansion of a named kernel over the basis.

    Names: ret, adv, bar (time-symmetric), odd (D = ret - adv), one (D1),
    feynman, dyson, d_plus, d_minus, delta_plus, delta_minus.
    """
    try:
        return _NAMED[name]
    except KeyError:
        raise ValueError(f"unknown kernel name {name!r}; expected one of {KERNEL_NAMES}") from None


def combine(a: KernelExpr, scalar_a, b: KernelExpr, scalar_b) -> KernelExpr:
    return scalar_a * a + scalar_b * b


def reflect(a: KernelExpr) -> KernelExpr:
    """Argument reversal K(x) -> K(-x), acting linearly on the basis."""
    return KernelExpr({b.reflected(): c for b, c in a.items()})


@dataclass(frozen=True)
class IdentityResult:
    key: str
    statement: str
    passed: bool
    lhs: dict
    rhs: dict


def _check(key, statement, lhs: KernelExpr, rhs: KernelExpr) -> IdentityResult:
    return IdentityResult(key, statement, lhs == rhs, lhs.to_dict(), rhs.to_dict())


def verify_identity_suite() -> list[IdentityResult]:
    """Check the propagator identities by exact equality.

    Failures are reported in the returned list, never raised.
    """
    c = canonical
    d_plus, d_minus = c("d_plus"), c("d_minus")
    # Component form of bar - (i/2) D1, written term by term
    expanded = (HALF * ((R_PLUS + A_PLUS) + (R_MINUS + A_MINUS))
                + HALF * ((R_PLUS - A_PLUS) - (R_MINUS - A_MINUS)))
    fey, dys = c("feynman"), c("dyson")
    differs_everywhere = all(x != y for (_, x), (_, y) in zip(fey.items(), dys.items()))
    results = [
        _check("retarded_split", "D_ret = Dbar + D/2", c("ret"), c("bar") + HALF * c("odd")),
        _check("commutator_cut", "i D = Delta+ - Delta-", I * c("odd"), c("delta_plus") - c("delta_minus")),
        _check("odd_from_cut", "D = D+ + D- = (-i Delta+) + (i Delta-)",
               c("odd"), -I * c("delta_plus") + I * c("delta_minus")),
        _check("odd_components", "D = D+ + D-", c("odd"), d_plus + d_minus),
        _check("negative_cut_sign", "i D- = -Delta-", I * d_minus, -c("delta_minus")),
        _check("even_from_components", "D1 = i(D+ - D-)", c("one"), I * (d_plus - d_minus)),
        _check("even_from_cut", "D1 = Delta+ + Delta-", c("one"), c("delta_plus") + c("delta_minus")),
        _check("positive_components", "D+ = D_ret+ - D_adv+", d_plus, R_PLUS - A_PLUS),
        _check("feynman_definition", "D_F = D_ret+ + D_adv-", fey, R_PLUS + A_MINUS),
        _check("feynman_split", "D_F = Dbar - (i/2) D1", fey, c("bar") - I * HALF * c("one")),
        _check("feynman_component_expansion", "Dbar - (i/2) D1 expanded in components = D_ret+ + D_adv-",
               c("bar") - I * HALF * c("one"), expanded),
        _check("component_expansion_is_feynman", "component expansion = D_F", expanded, fey),
        _check("reflection_rule", "D+(x) = -D-(-x)", reflect(d_plus), -d_minus),
        _check("reflect_ret", "reflect(D_ret) = D_adv", reflect(c("ret")), c("adv")),
        _check("reflect_involution", "reflect(reflect(D_F)) = D_F", reflect(reflect(fey)), fey),
        _check("dyson", "Dbar + (i/2) D1 = D_adv+ + D_ret-",
               c("bar") + I * HALF * c("one"), A_PLUS + R_MINUS),
        _check("dyson_named", "dyson = D_adv+ + D_ret-", dys, A_PLUS + R_MINUS),
        _check("feynman_minus_dyson", "D_F - D_Dyson = -i D1", fey - dys, -I * c("one")),
        IdentityResult("dyson_distinct", "D_Dyson differs from D_F in every coefficient",
                       differs_everywhere, fey.to_dict(), dys.to_dict()),
    ]
    return results
