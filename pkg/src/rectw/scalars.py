"""Exact coefficient arithmetic.

Every coefficient in the engine is a sparse polynomial in the formal
parameters ``h`` (the quantization step), ``al`` (the level parameter) and,
for twist experiments, ``be`` (a formal shift), with Fraction coefficients.
No floating point is used anywhere.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Union

#: variable order used for exponent keys
VARS = ("h", "al", "be")
_VAR_INDEX = {name: k for k, name in enumerate(VARS)}

Rat = Union[int, Fraction]

_ZERO_KEY = (0, 0, 0)


class Scalar:
    """Sparse polynomial over Fraction, keyed by exponent triples.

    ``terms`` maps ``(e_h, e_al, e_be)`` to a nonzero Fraction.  Instances
    are immutable after construction; equality is decided by the normal
    form (merged keys, no zero coefficients).
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[tuple, Fraction] | None = None):
        self.terms = dict(terms) if terms else {}
        self._hash = None

    # -- constructors -----------------------------------------------------

    @staticmethod
    def rational(value: Rat) -> "Scalar":
        q = Fraction(value)
        if q == 0:
            return ZERO
        return Scalar({_ZERO_KEY: q})

    @staticmethod
    def var(name: str) -> "Scalar":
        key = [0, 0, 0]
        key[_VAR_INDEX[name]] = 1
        return Scalar({tuple(key): Fraction(1)})

    @staticmethod
    def of(value: "Scalar | Rat") -> "Scalar":
        if isinstance(value, Scalar):
            return value
        return Scalar.rational(value)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other: "Scalar") -> "Scalar":
        if not self.terms:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            acc = out.get(key)
            if acc is None:
                out[key] = coeff
            else:
                acc = acc + coeff
                if acc:
                    out[key] = acc
                else:
                    del out[key]
        return Scalar(out)

    def __neg__(self) -> "Scalar":
        if not self.terms:
            return self
        return Scalar({key: -coeff for key, coeff in self.terms.items()})

    def __sub__(self, other: "Scalar") -> "Scalar":
        if not other.terms:
            return self
        return self + (-other)

    def __mul__(self, other: "Scalar") -> "Scalar":
        a, b = self.terms, other.terms
        if not a or not b:
            return ZERO
        if a == _ONE_TERMS:
            return other
        if b == _ONE_TERMS:
            return self
        out: dict = {}
        for (x0, x1, x2), ca in a.items():
            for (y0, y1, y2), cb in b.items():
                key = (x0 + y0, x1 + y1, x2 + y2)
                c = ca * cb
                acc = out.get(key)
                if acc is None:
                    out[key] = c
                else:
                    acc = acc + c
                    if acc:
                        out[key] = acc
                    else:
                        del out[key]
        return Scalar(out)

    def scale(self, q: Rat) -> "Scalar":
        """Multiply by a plain rational (fast path, no dict-of-dict work)."""
        if q == 1:
            return self
        if q == 0 or not self.terms:
            return ZERO
        return Scalar({key: coeff * q for key, coeff in self.terms.items()})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(frozenset(self.terms.items()))
            self._hash = h
        return h

    # -- substitution -------------------------------------------------------

    def specialize(self, assignments: Mapping[str, Rat]) -> "Scalar":
        """Substitute rationals for a subset of the variables.

        Unassigned variables stay formal; the substitution is a ring
        homomorphism.
        """
        values = {_VAR_INDEX[name]: Fraction(v) for name, v in assignments.items()}
        if not values:
            return self
        out: dict = {}
        for key, coeff in self.terms.items():
            new_key = list(key)
            for idx, val in values.items():
                e = key[idx]
                if e:
                    coeff = coeff * val ** e
                new_key[idx] = 0
            if coeff == 0:
                continue
            nk = tuple(new_key)
            acc = out.get(nk)
            if acc is None:
                out[nk] = coeff
            else:
                acc = acc + coeff
                if acc:
                    out[nk] = acc
                else:
                    del out[nk]
        return Scalar(out)

    def constant_value(self) -> Fraction:
        """The value of a constant polynomial (raises if a variable survives)."""
        if not self.terms:
            return Fraction(0)
        if list(self.terms) != [_ZERO_KEY]:
            raise ValueError(f"not a constant: {self}")
        return self.terms[_ZERO_KEY]

    # -- rendering / serialization ------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for key in sorted(self.terms):
            coeff = self.terms[key]
            factors = []
            for name, e in zip(VARS, key):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            if not factors:
                body = str(coeff)
            elif coeff == 1:
                body = "*".join(factors)
            elif coeff == -1:
                body = "-" + "*".join(factors)
            else:
                body = str(coeff) + "*" + "*".join(factors)
            chunks.append(body)
        text = chunks[0]
        for body in chunks[1:]:
            text += " - " + body[1:] if body.startswith("-") else " + " + body
        return text

    def __repr__(self) -> str:
        return f"Scalar({self})"

    def to_json(self) -> list:
        """Lossless form: sorted arrays (e_h, e_al[, e_be], num, den)."""
        rows = []
        for key in sorted(self.terms):
            coeff = self.terms[key]
            if key[2]:
                rows.append([key[0], key[1], key[2], coeff.numerator, coeff.denominator])
            else:
                rows.append([key[0], key[1], coeff.numerator, coeff.denominator])
        return rows

    @staticmethod
    def from_json(rows: Iterable[list]) -> "Scalar":
        terms = {}
        for row in rows:
            if len(row) == 4:
                eh, ea, num, den = row
                eb = 0
            else:
                eh, ea, eb, num, den = row
            terms[(eh, ea, eb)] = Fraction(num, den)
        return Scalar(terms)


ZERO = Scalar()
ONE = Scalar.rational(1)
MINUS_ONE = Scalar.rational(-1)
H = Scalar.var("h")
AL = Scalar.var("al")
BE = Scalar.var("be")
HALF = Scalar.rational(Fraction(1, 2))

_ONE_TERMS = ONE.terms


def epsilon_of(alpha: Scalar, shift: int) -> Scalar:
    """The eliminated second deformation parameter, -h*(alpha + shift).

    ``shift`` is the rank offset the evaluation homomorphism requires:
    the matrix size for the plain case, the graded size difference m-n for
    the graded case.
    """
    return -(H * (alpha + Scalar.rational(shift)))
