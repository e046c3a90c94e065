"""The l-fold vacuum module and exact operator evaluation.

Basis monomials are normally ordered words of strictly negative modes applied
to the vacuum.  Nonnegative modes annihilate the vacuum, so the action of any
finite element is computed by commuting annihilators rightward through the
creation factors.  Symbolic series act exactly too: on a vector of degree D,
an unbounded summation index u contributes only for |u| <= D + C, where C is
the largest constant offset among the term's mode expressions (annihilating
factors act slot-locally, so the slot degree bounds how far an index can run).
A debug mode re-evaluates a few terms beyond each bound and raises if any of
them acts nonzero.

Identity checks evaluate candidate operators on every basis monomial up to a
cutoff degree; a nonzero difference is returned verbatim as a witness.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .enveloping import Element, Word, eta_expand_word
from .liealg import SessionConfig, Sym, bracket_sym
from .operators import (
    CommutatorOp, ComposeOp, FactorSpec, FiniteOp, Op, ScaledOp, SeriesExpr,
    SeriesOp, SeriesTerm, SumOp,
)
from .scalars import ONE, Scalar

Vec = Dict[Word, Scalar]


class BoundViolation(RuntimeError):
    """A series term beyond the derived evaluation bound acted nonzero."""


class ModuleVector:
    """Finite linear combination of basis monomials (words of negative modes)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Vec] = None):
        self.terms = terms if terms is not None else {}

    @staticmethod
    def vacuum() -> "ModuleVector":
        return ModuleVector({(): ONE})

    @staticmethod
    def monomial(word: Word, coeff: Scalar = ONE) -> "ModuleVector":
        return ModuleVector({word: coeff} if coeff else {})

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        out = dict(self.terms)
        _vadd(out, other.terms, ONE)
        return ModuleVector(out)

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        out = dict(self.terms)
        _vadd(out, other.terms, Scalar.rational(-1))
        return ModuleVector(out)

    def scale(self, coeff: Scalar) -> "ModuleVector":
        coeff = Scalar.of(coeff)
        if not coeff:
            return ModuleVector()
        return ModuleVector({w: c * coeff for w, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModuleVector):
            return NotImplemented
        return self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for word in sorted(self.terms):
            body = "*".join(s.render() for s in word) + "|0>" if word else "|0>"
            parts.append(f"({self.terms[word]})*{body}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"ModuleVector[{self.render()}]"

    def to_json(self) -> list:
        return [
            {"word": [[s.slot, s.row, s.col, s.mode] for s in word],
             "coeff": self.terms[word].to_json()}
            for word in sorted(self.terms)
        ]


def _vadd(acc: Vec, other: Vec, coeff: Scalar):
    if not coeff:
        return
    if coeff is ONE:
        for w, c in other.items():
            a = acc.get(w)
            if a is None:
                acc[w] = c
            else:
                a = a + c
                if a:
                    acc[w] = a
                else:
                    del acc[w]
        return
    for w, c in other.items():
        c = c * coeff
        if not c:
            continue
        a = acc.get(w)
        if a is None:
            acc[w] = c
        else:
            a = a + c
            if a:
                acc[w] = a
            else:
                del acc[w]


def word_degree(word: Word) -> int:
    return sum(-s.mode for s in word)


@dataclass
class EqualityReport:
    equal: bool
    checked: int
    degree: int
    witness: Optional[Word] = None
    defect: Optional[ModuleVector] = None

    def describe(self) -> str:
        if self.equal:
            return f"pass ({self.checked} vectors up to degree {self.degree})"
        wit = "*".join(s.render() for s in self.witness) + "|0>" if self.witness else "|0>"
        return f"FAIL at {wit}: defect {self.defect.render()}"


class VacuumModule:
    """Evaluation context: caches symbol actions and per-operator results."""

    def __init__(self, session: SessionConfig, debug_bounds: bool = False):
        self.session = session
        self.debug_bounds = debug_bounds
        self._ins_cache: Dict[Tuple[Sym, Word], Vec] = {}
        self._ann_cache: Dict[Tuple[Sym, Word], Vec] = {}
        self._sym_cache: Dict[Tuple[Sym, Word], Vec] = {}
        self._word_cache: Dict[Tuple[Word, Word], Vec] = {}
        self._op_cache: Dict[Tuple[int, Word], Vec] = {}
        self._op_refs: Dict[int, Op] = {}
        self._basis_cache: Dict[int, List[Word]] = {}

    # -- basis -------------------------------------------------------------

    def basis(self, degree: int) -> List[Word]:
        """All monomials of total degree exactly ``degree``, sorted."""
        if degree in self._basis_cache:
            return self._basis_cache[degree]
        ses = self.session
        syms = [
            Sym(slot, -d, i, j)
            for slot in range(1, ses.l + 1)
            for d in range(degree, 0, -1)
            for i in range(1, ses.size + 1)
            for j in range(1, ses.size + 1)
        ]
        syms.sort()
        out: List[Word] = []

        def extend(prefix: List[Sym], start: int, remaining: int):
            if remaining == 0:
                out.append(tuple(prefix))
                return
            for k in range(start, len(syms)):
                s = syms[k]
                d = -s.mode
                if d > remaining:
                    continue
                if prefix and s == prefix[-1] and ses.sym_parity(s):
                    continue  # odd generators square to zero
                prefix.append(s)
                extend(prefix, k, remaining - d)
                prefix.pop()

        extend([], 0, degree)
        out.sort()
        self._basis_cache[degree] = out
        return out

    def basis_up_to(self, degree: int) -> List[Word]:
        out: List[Word] = []
        for d in range(degree + 1):
            out.extend(self.basis(d))
        return out

    # -- action of finite elements -----------------------------------------------

    def _ins(self, x: Sym, ws: Word) -> Vec:
        """Insert a creation symbol into a sorted word of its own slot."""
        key = (x, ws)
        hit = self._ins_cache.get(key)
        if hit is not None:
            return hit
        ses = self.session
        if not ws:
            out: Vec = {(x,): ONE}
        else:
            w1 = ws[0]
            rest = ws[1:]
            if x < w1:
                out = {(x,) + ws: ONE}
            elif x == w1:
                if ses.sym_parity(x):
                    out = {}
                    linear, _central = bracket_sym(ses, x, x)
                    for z, sgn in linear:
                        _vadd(out, self._ins(z, rest), Scalar.rational(Fraction(sgn, 2)))
                else:
                    out = {(x,) + ws: ONE}
            else:
                out = {}
                koszul = -1 if (ses.sym_parity(x) & ses.sym_parity(w1)) else 1
                sub = self._ins(x, rest)
                for word2, c2 in sub.items():
                    _vadd(out, self._ins(w1, word2), c2.scale(koszul))
                linear, _central = bracket_sym(ses, x, w1)
                for z, sgn in linear:
                    _vadd(out, self._ins(z, rest), Scalar.rational(sgn))
        self._ins_cache[key] = out
        return out

    def _ann(self, x: Sym, ws: Word) -> Vec:
        """Push an annihilation symbol rightward through its slot block."""
        key = (x, ws)
        hit = self._ann_cache.get(key)
        if hit is not None:
            return hit
        ses = self.session
        if not ws or x.mode > word_degree(ws):
            out: Vec = {}
        else:
            w1 = ws[0]
            rest = ws[1:]
            out = {}
            sub = self._ann(x, rest)
            if sub:
                koszul = -1 if (ses.sym_parity(x) & ses.sym_parity(w1)) else 1
                for word2, c2 in sub.items():
                    _vadd(out, self._ins(w1, word2), c2.scale(koszul))
            linear, central = bracket_sym(ses, x, w1)
            for z, sgn in linear:
                if z.mode < 0:
                    _vadd(out, self._ins(z, rest), Scalar.rational(sgn))
                else:
                    _vadd(out, self._ann(z, rest), Scalar.rational(sgn))
            if central:
                _vadd(out, {rest: ONE}, central)
        self._ann_cache[key] = out
        return out

    def apply_symbol(self, x: Sym, mono: Word) -> Vec:
        key = (x, mono)
        hit = self._sym_cache.get(key)
        if hit is not None:
            return hit
        ses = self.session
        lo = 0
        while lo < len(mono) and mono[lo].slot < x.slot:
            lo += 1
        hi = lo
        while hi < len(mono) and mono[hi].slot == x.slot:
            hi += 1
        pre, mid, post = mono[:lo], mono[lo:hi], mono[hi:]
        if x.mode >= 0:
            inner = self._ann(x, mid)
        else:
            inner = self._ins(x, mid)
        if not inner:
            out: Vec = {}
        else:
            koszul = 1
            if ses.sym_parity(x):
                odd = sum(ses.sym_parity(s) for s in pre) & 1
                koszul = -1 if odd else 1
            out = {}
            for sw, c in inner.items():
                _vadd(out, {pre + sw + post: ONE}, c.scale(koszul))
        self._sym_cache[key] = out
        return out

    def act_word(self, word: Word, mono: Word) -> Vec:
        """Apply a word of symbols, rightmost factor first."""
        if not word:
            return {mono: ONE}
        key = (word, mono)
        hit = self._word_cache.get(key)
        if hit is not None:
            return hit
        vec: Vec = self.apply_symbol(word[-1], mono)
        for sym in reversed(word[:-1]):
            nxt: Vec = {}
            for m, c in vec.items():
                _vadd(nxt, self.apply_symbol(sym, m), c)
            vec = nxt
            if not vec:
                break
        self._word_cache[key] = vec
        return vec

    def act(self, elem: Element, vec: ModuleVector) -> ModuleVector:
        out: Vec = {}
        for mono, cv in vec.terms.items():
            for word, cw in elem.terms.items():
                c = cv * cw
                if c:
                    _vadd(out, self.act_word(word, mono), c)
        return ModuleVector(out)

    # -- action of series --------------------------------------------------------

    def act_series(
        self,
        expr: SeriesExpr,
        vec: ModuleVector,
        eta: Optional[Dict[int, Scalar]] = None,
    ) -> ModuleVector:
        out: Vec = {}
        for mono, cv in vec.terms.items():
            _vadd(out, self._series_on_mono(expr, mono, eta), cv)
        return ModuleVector(out)

    def _series_on_mono(self, expr: SeriesExpr, mono: Word,
                        eta: Optional[Dict[int, Scalar]]) -> Vec:
        degree = word_degree(mono)
        out: Vec = {}
        for term in expr.terms:
            self._term_on_mono(term, mono, degree, eta, out)
            if self.debug_bounds:
                self._check_bounds(term, mono, degree, eta, expr.label)
        return out

    def _index_ranges(self, term: SeriesTerm, degree: int):
        bound = degree + max(
            (abs(f.mode_const) for f in term.factors), default=0)
        ranges = []
        for _name, spec in term.indices:
            kind = spec[0]
            if kind == "range":
                ranges.append(range(spec[1], spec[2] + 1))
            elif kind == "ge":
                ranges.append(range(spec[1], bound + 1))
            elif kind == "z":
                ranges.append(range(-bound, bound + 1))
            else:
                raise ValueError(f"unknown range spec {spec!r}")
        return ranges

    def _term_on_mono(self, term: SeriesTerm, mono: Word, degree: int,
                      eta: Optional[Dict[int, Scalar]], out: Vec):
        names = [name for name, _ in term.indices]
        for values in itertools.product(*self._index_ranges(term, degree)):
            coeff = self._instance_coeff(term, values)
            if not coeff:
                continue
            word = _instance_word(term, names, values)
            if eta:
                for w2, c2 in eta_expand_word(self.session, word, coeff, eta):
                    _vadd(out, self.act_word(w2, mono), c2)
            else:
                _vadd(out, self.act_word(word, mono), coeff)

    def _instance_coeff(self, term: SeriesTerm, values) -> Scalar:
        if not term.poly:
            return term.coeff
        total = Fraction(0)
        for exps, q in term.poly:
            prod = q
            for v, e in zip(values, exps):
                if e:
                    prod *= Fraction(v) ** e
            total += prod
        return term.coeff.scale(total)

    def _check_bounds(self, term: SeriesTerm, mono: Word, degree: int,
                      eta: Optional[Dict[int, Scalar]], label: str):
        names = [name for name, _ in term.indices]
        ranges = self._index_ranges(term, degree)
        for k, (_name, spec) in enumerate(term.indices):
            kind = spec[0]
            if kind == "range":
                continue
            probes = []
            top = ranges[k][-1] if len(ranges[k]) else spec[1] - 1
            probes.extend(top + d for d in (1, 2, 3))
            if kind == "z":
                bot = ranges[k][0]
                probes.extend(bot - d for d in (1, 2, 3))
            for probe in probes:
                iters = [[probe] if j == k else list(ranges[j])
                         for j in range(len(ranges))]
                leak: Vec = {}
                for values in itertools.product(*iters):
                    coeff = self._instance_coeff(term, values)
                    if not coeff:
                        continue
                    word = _instance_word(term, names, values)
                    if eta:
                        for w2, c2 in eta_expand_word(self.session, word, coeff, eta):
                            _vadd(leak, self.act_word(w2, mono), c2)
                    else:
                        _vadd(leak, self.act_word(word, mono), coeff)
                if leak:
                    raise BoundViolation(
                        f"series {label or '<unnamed>'}: index {_name}={probe} "
                        f"beyond bound acts nonzero on degree-{degree} vector")

    # -- operator application ----------------------------------------------------

    def apply(self, op: Op, vec: ModuleVector) -> ModuleVector:
        out: Vec = {}
        for mono, c in vec.terms.items():
            _vadd(out, self.apply_mono(op, mono), c)
        return ModuleVector(out)

    def apply_mono(self, op: Op, mono: Word) -> Vec:
        key = (id(op), mono)
        hit = self._op_cache.get(key)
        if hit is not None:
            return hit
        self._op_refs[id(op)] = op
        if isinstance(op, FiniteOp):
            out: Vec = {}
            for word, cw in op.elem.terms.items():
                _vadd(out, self.act_word(word, mono), cw)
        elif isinstance(op, SeriesOp):
            out = self._series_on_mono(op.series, mono, op.eta)
        elif isinstance(op, ScaledOp):
            out = {}
            _vadd(out, self.apply_mono(op.inner, mono), op.coeff)
        elif isinstance(op, CommutatorOp):
            out = {}
            for m, c in self.apply_mono(op.b, mono).items():
                _vadd(out, self.apply_mono(op.a, m), c)
            sign = Scalar.rational(-op.koszul)
            for m, c in self.apply_mono(op.a, mono).items():
                _vadd(out, self.apply_mono(op.b, m), c * sign)
        elif isinstance(op, ComposeOp):
            vec: Vec = {mono: ONE}
            for part in reversed(op.parts):
                nxt: Vec = {}
                for m, c in vec.items():
                    _vadd(nxt, self.apply_mono(part, m), c)
                vec = nxt
                if not vec:
                    break
            out = vec
        elif isinstance(op, SumOp):
            out = {}
            for part in op.parts:
                _vadd(out, self.apply_mono(part, mono), ONE)
        else:
            raise TypeError(f"unknown operator node {type(op)!r}")
        self._op_cache[key] = out
        return out

    # -- identity checking ---------------------------------------------------------

    def operators_equal_on(self, o1: Op, o2: Op, degree: int) -> EqualityReport:
        checked = 0
        for d in range(degree + 1):
            for mono in self.basis(d):
                left = self.apply_mono(o1, mono)
                diff = dict(left)
                _vadd(diff, self.apply_mono(o2, mono), Scalar.rational(-1))
                checked += 1
                if diff:
                    return EqualityReport(False, checked, degree, mono, ModuleVector(diff))
        return EqualityReport(True, checked, degree)

    def operator_is_zero_on(self, op: Op, degree: int) -> EqualityReport:
        return self.operators_equal_on(op, SumOp(()), degree)


def _instance_word(term: SeriesTerm, names, values) -> Word:
    assign = dict(zip(names, values))
    syms = []
    for f in term.factors:
        slot = assign[f.slot] if isinstance(f.slot, str) else f.slot
        row = assign[f.row] if isinstance(f.row, str) else f.row
        col = assign[f.col] if isinstance(f.col, str) else f.col
        mode = f.mode_const
        for name, c in f.mode_coeffs:
            mode += c * assign[name]
        syms.append(Sym(slot, mode, row, col))
    return tuple(syms)
