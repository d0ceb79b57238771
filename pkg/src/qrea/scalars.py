"""Exact Laurent polynomials in ``q`` with Gaussian-rational coefficients.

``ExactQ`` is the scalar type of the symbolic layer.  Values are immutable;
the real and imaginary coefficient tables are kept apart so that the very
common real case never touches complex arithmetic.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

__all__ = ["ExactQ", "ONE", "ZERO", "Q", "QINV", "QDIFF", "q_pow", "as_exact"]


def _norm(c):
    # keep integral coefficients as plain ints (fast path)
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c.numerator)
    return c


def _clean(d: dict) -> dict:
    return {e: _norm(c) for e, c in d.items() if c != 0}


def _poly_mul(a: Mapping[int, Rational], b: Mapping[int, Rational]) -> dict:
    out: dict[int, Rational] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = ea + eb
            out[e] = out.get(e, 0) + ca * cb
    return out


def _poly_add(a: Mapping, b: Mapping, sign: int = 1) -> dict:
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + sign * c
    return out


class ExactQ:
    """Element of Q(i)[q, q^-1].

    >>> (QINV - Q) * Q == ONE - Q * Q
    True
    """

    __slots__ = ("_re", "_im", "_hash")

    def __init__(self, re_terms: Mapping[int, Rational] | None = None,
                 im_terms: Mapping[int, Rational] | None = None):
        self._re = _clean(dict(re_terms or {}))
        self._im = _clean(dict(im_terms or {}))
        self._hash = None

    # -- construction ------------------------------------------------------
    @classmethod
    def const(cls, c) -> "ExactQ":
        if isinstance(c, ExactQ):
            return c
        if isinstance(c, complex):
            raise TypeError("floating complex numbers are not exact; pass Fractions")
        if isinstance(c, tuple):
            re_c, im_c = c
            return cls({0: Fraction(re_c)}, {0: Fraction(im_c)})
        if isinstance(c, float):
            raise TypeError("floats are not exact; pass a Fraction")
        return cls({0: c})

    @classmethod
    def monomial(cls, exponent: int, coeff=1) -> "ExactQ":
        return cls({int(exponent): coeff})

    @classmethod
    def gaussian(cls, re_c, im_c, exponent: int = 0) -> "ExactQ":
        return cls({exponent: Fraction(re_c)}, {exponent: Fraction(im_c)})

    # -- inspection --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self._re and not self._im

    def is_real(self) -> bool:
        return not self._im

    def exponents(self) -> list[int]:
        return sorted(set(self._re) | set(self._im))

    def coeff(self, exponent: int) -> tuple[Fraction, Fraction]:
        return (Fraction(self._re.get(exponent, 0)), Fraction(self._im.get(exponent, 0)))

    def terms(self) -> dict[int, tuple[Fraction, Fraction]]:
        return {e: self.coeff(e) for e in self.exponents()}

    def is_monomial(self) -> bool:
        return len(self.exponents()) == 1

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other) -> "ExactQ":
        other = as_exact(other)
        if other is NotImplemented:
            return other
        if not other._re and not other._im:
            return self
        if not self._re and not self._im:
            return other
        return ExactQ(_poly_add(self._re, other._re), _poly_add(self._im, other._im))

    __radd__ = __add__

    def __neg__(self) -> "ExactQ":
        return ExactQ({e: -c for e, c in self._re.items()},
                      {e: -c for e, c in self._im.items()})

    def __sub__(self, other) -> "ExactQ":
        other = as_exact(other)
        if other is NotImplemented:
            return other
        return ExactQ(_poly_add(self._re, other._re, -1), _poly_add(self._im, other._im, -1))

    def __rsub__(self, other) -> "ExactQ":
        return as_exact(other) - self

    def __mul__(self, other) -> "ExactQ":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return ZERO
            return ExactQ({e: c * other for e, c in self._re.items()},
                          {e: c * other for e, c in self._im.items()})
        other = as_exact(other)
        if other is NotImplemented:
            return other
        if not self._im and not other._im:
            return ExactQ(_poly_mul(self._re, other._re))
        re_part = _poly_add(_poly_mul(self._re, other._re), _poly_mul(self._im, other._im), -1)
        im_part = _poly_add(_poly_mul(self._re, other._im), _poly_mul(self._im, other._re))
        return ExactQ(re_part, im_part)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "ExactQ":
        if n < 0:
            if self.is_monomial():
                (e,) = self.exponents()
                re_c, im_c = self.coeff(e)
                if im_c == 0 and abs(re_c) == 1:
                    return ExactQ.monomial(e * n, re_c ** n)
            raise ValueError("only unit monomials can be inverted in the Laurent ring")
        out, base = ONE, self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def star(self) -> "ExactQ":
        """Complex conjugation of the coefficients; q is real."""
        if not self._im:
            return self
        return ExactQ(self._re, {e: -c for e, c in self._im.items()})

    def eval(self, q0: float) -> complex:
        if not (0.0 < q0 < 1.0):
            raise ValueError(f"q0 must lie in (0, 1), got {q0!r}")
        re_v = sum(float(c) * q0 ** e for e, c in self._re.items())
        if not self._im:
            return complex(re_v, 0.0)
        im_v = sum(float(c) * q0 ** e for e, c in self._im.items())
        return complex(re_v, im_v)

    # -- comparison --------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, ExactQ):
            return self._re == other._re and self._im == other._im
        o = as_exact(other)
        if o is NotImplemented:
            return NotImplemented
        return self == o

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((frozenset(self._re.items()), frozenset(self._im.items())))
        return self._hash

    def __bool__(self) -> bool:
        return not self.is_zero()

    # -- text form ---------------------------------------------------------
    def to_str(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        for e in self.exponents():
            re_c, im_c = self.coeff(e)
            c = f"{re_c.numerator}/{re_c.denominator}"
            if im_c != 0:
                c += f"+{im_c.numerator}/{im_c.denominator}*i"
            parts.append(f"{c}*q^{e}")
        return " + ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "ExactQ":
        text = text.strip()
        if text == "0":
            return ZERO
        re_t, im_t = {}, {}
        for part in text.split(" + "):
            m = _TERM_RE.fullmatch(part.strip())
            if m is None:
                raise ValueError(f"cannot parse term {part!r}")
            e = int(m.group("e"))
            re_t[e] = Fraction(int(m.group("rn")), int(m.group("rd")))
            if m.group("in") is not None:
                im_t[e] = Fraction(int(m.group("in")), int(m.group("id")))
        return cls(re_t, im_t)

    def __repr__(self) -> str:
        return f"ExactQ({self.to_str()!r})"


_TERM_RE = re.compile(
    r"(?P<rn>-?\d+)/(?P<rd>\d+)(?:\+(?P<in>-?\d+)/(?P<id>\d+)\*i)?\*q\^(?P<e>-?\d+)"
)


def as_exact(x):
    if isinstance(x, ExactQ):
        return x
    if isinstance(x, (int, Fraction)):
        return ExactQ({0: x}) if x != 0 else ZERO
    return NotImplemented


def q_pow(n: int, coeff=1) -> ExactQ:
    return ExactQ.monomial(n, coeff)


def exact_sum(items: Iterable[ExactQ]) -> ExactQ:
    re_t: dict[int, Rational] = {}
    im_t: dict[int, Rational] = {}
    for x in items:
        for e, c in x._re.items():
            re_t[e] = re_t.get(e, 0) + c
        for e, c in x._im.items():
            im_t[e] = im_t.get(e, 0) + c
    return ExactQ(re_t, im_t)


ZERO = ExactQ()
ONE = ExactQ({0: 1})
Q = ExactQ({1: 1})
QINV = ExactQ({-1: 1})
QDIFF = ExactQ({-1: 1, 1: -1})  # q^-1 - q
I_UNIT = ExactQ({}, {0: 1})
