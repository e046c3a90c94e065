"""Symbolic series and lazily composed operators.

A SeriesExpr is a finite list of templates, each a product of mode symbols
whose slot / matrix indices and modes may depend on summation indices.  Mode
expressions are affine with per-index slopes in {-1, 0, 1}; that unit-slope
shape is what makes the evaluation bound in the vacuum module sound.

Operators form a small algebraic node tree (finite element, series, scalar
multiple, sum, composition, super commutator).  Application to module
vectors is exact and finite; nodes are immutable and cache their results
per basis monomial inside the evaluating module.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple, Union

from .enveloping import Element
from .liealg import SessionConfig
from .scalars import ONE, Scalar

IndexValue = Union[int, str]

#: index range specs: ("range", lo, hi) inclusive, ("ge", lo), ("z",)
RangeSpec = Tuple


@dataclass(frozen=True)
class FactorSpec:
    slot: IndexValue
    row: IndexValue
    col: IndexValue
    mode_const: int = 0
    mode_coeffs: Tuple[Tuple[str, int], ...] = ()


@dataclass(frozen=True)
class SeriesTerm:
    coeff: Scalar
    factors: Tuple[FactorSpec, ...]
    indices: Tuple[Tuple[str, RangeSpec], ...] = ()
    #: polynomial in the summation indices: (exponent tuple, Fraction) pairs,
    #: exponents aligned with ``indices``; empty means the constant 1
    poly: Tuple[Tuple[Tuple[int, ...], Fraction], ...] = ()


@dataclass(frozen=True)
class SeriesExpr:
    terms: Tuple[SeriesTerm, ...]
    label: str = ""


def fspec(slot, row, col, mode) -> FactorSpec:
    """Factor builder; ``mode`` is an int or (const, {index: slope})."""
    if isinstance(mode, int):
        return FactorSpec(slot, row, col, mode, ())
    const, coeffs = mode
    items = tuple(sorted((name, c) for name, c in coeffs.items() if c))
    for _, c in items:
        if c not in (-1, 1):
            raise ValueError(f"mode slope must be unit, got {c}")
    return FactorSpec(slot, row, col, const, items)


def sterm(coeff, factors, indices=(), poly=()) -> SeriesTerm:
    return SeriesTerm(Scalar.of(coeff), tuple(factors), tuple(indices), tuple(poly))


def series(terms: Sequence[SeriesTerm], label: str = "") -> SeriesExpr:
    return SeriesExpr(tuple(terms), label)


# -- operator nodes -------------------------------------------------------------


class Op:
    """Base node.  ``parity`` is 0/1 for homogeneous operators, None if mixed."""

    __slots__ = ("parity",)


class FiniteOp(Op):
    __slots__ = ("elem",)

    def __init__(self, elem: Element):
        self.elem = elem
        self.parity = elem.parity()


class SeriesOp(Op):
    __slots__ = ("series", "eta", "_session")

    def __init__(self, session: SessionConfig, expr: SeriesExpr,
                 eta: Optional[Dict[int, Scalar]] = None):
        self._session = session
        self.series = expr
        self.eta = dict(eta) if eta else None
        self.parity = _series_parity(session, expr)


class ScaledOp(Op):
    __slots__ = ("coeff", "inner")

    def __init__(self, coeff: Scalar, inner: Op):
        self.coeff = Scalar.of(coeff)
        self.inner = inner
        self.parity = inner.parity


class SumOp(Op):
    __slots__ = ("parts",)

    def __init__(self, parts: Sequence[Op]):
        self.parts = tuple(parts)
        self.parity = _common_parity(p.parity for p in self.parts)


class ComposeOp(Op):
    """Operator product; the rightmost part acts first."""

    __slots__ = ("parts",)

    def __init__(self, parts: Sequence[Op]):
        self.parts = tuple(parts)
        if not self.parts:
            raise ValueError("empty composition")
        par = 0
        for p in self.parts:
            if p.parity is None:
                par = None
                break
            par ^= p.parity
        self.parity = par


class CommutatorOp(Op):
    """Super commutator [a, b] = ab - (-1)^{|a||b|} ba."""

    __slots__ = ("a", "b", "koszul")

    def __init__(self, a: Op, b: Op):
        pa, pb = a.parity, b.parity
        if pa == 0 or pb == 0:
            self.koszul = 1
        elif pa == 1 and pb == 1:
            self.koszul = -1
        else:
            raise ValueError("super commutator needs homogeneous (or even) operators")
        self.a, self.b = a, b
        self.parity = (0 if pa is None else pa) ^ (0 if pb is None else pb)


def zero_op() -> Op:
    return SumOp(())


def op_sum(*parts: Op) -> Op:
    flat = []
    for p in parts:
        if isinstance(p, SumOp):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return SumOp(flat)


def op_scale(coeff, op: Op) -> Op:
    return ScaledOp(Scalar.of(coeff), op)


def op_compose(*parts: Op) -> Op:
    if len(parts) == 1:
        return parts[0]
    return ComposeOp(parts)


def op_comm(a: Op, b: Op) -> Op:
    return CommutatorOp(a, b)


def op_anticomm(a: Op, b: Op) -> Op:
    return SumOp((ComposeOp((a, b)), ComposeOp((b, a))))


def eta_twist(op: Op, session: SessionConfig, shifts: Dict[int, Scalar]) -> Op:
    """Push the diagonal-shift automorphism through an operator tree.

    The shift map is an algebra homomorphism, so it distributes over sums,
    products and commutators; series defer the substitution to evaluation
    time (a symbolic mode only becomes zero at specific index values).
    """
    shifts = {s: b for s, b in shifts.items() if b}
    if not shifts:
        return op
    if isinstance(op, FiniteOp):
        return FiniteOp(op.elem._eta(shifts))
    if isinstance(op, SeriesOp):
        merged = dict(op.eta) if op.eta else {}
        for s, b in shifts.items():
            merged[s] = merged.get(s, Scalar.of(0)) + b
        merged = {s: b for s, b in merged.items() if b}
        return SeriesOp(op._session, op.series, merged or None)
    if isinstance(op, ScaledOp):
        return ScaledOp(op.coeff, eta_twist(op.inner, session, shifts))
    if isinstance(op, CommutatorOp):
        return CommutatorOp(eta_twist(op.a, session, shifts), eta_twist(op.b, session, shifts))
    if isinstance(op, ComposeOp):
        return ComposeOp([eta_twist(p, session, shifts) for p in op.parts])
    if isinstance(op, SumOp):
        return SumOp([eta_twist(p, session, shifts) for p in op.parts])
    raise TypeError(f"unknown operator node {type(op)!r}")


def _common_parity(parities) -> Optional[int]:
    seen = None
    for p in parities:
        if p is None:
            return None
        if seen is None:
            seen = p
        elif seen != p:
            return None
    return 0 if seen is None else seen


def _series_parity(session: SessionConfig, expr: SeriesExpr) -> Optional[int]:
    if not session.is_super:
        return 0

    def factor_parity(f: FactorSpec) -> Optional[int]:
        if isinstance(f.row, str) or isinstance(f.col, str):
            return None
        return (session.parity(f.row) + session.parity(f.col)) & 1

    seen = None
    for term in expr.terms:
        p = 0
        for f in term.factors:
            fp = factor_parity(f)
            if fp is None:
                # summed matrix indices pair up inside a term (row of one
                # factor equals col of the next), so try cancelling names
                return _series_parity_slow(session, expr)
            p ^= fp
        if seen is None:
            seen = p
        elif seen != p:
            return None
    return 0 if seen is None else seen


def _series_parity_slow(session: SessionConfig, expr: SeriesExpr) -> Optional[int]:
    # Parity of a term: every named index occurring an even number of times
    # across row/col positions drops out; an odd count makes parity depend on
    # the summation value, i.e. inhomogeneous.
    seen = None
    for term in expr.terms:
        counts: Dict[str, int] = {}
        p = 0
        for f in term.factors:
            for idx in (f.row, f.col):
                if isinstance(idx, str):
                    counts[idx] = counts.get(idx, 0) + 1
                elif session.parity(idx):
                    p ^= 1
        if any(c % 2 for c in counts.values()):
            return None
        if seen is None:
            seen = p
        elif seen != p:
            return None
    return 0 if seen is None else seen
