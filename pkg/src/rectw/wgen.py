"""Generators of the rectangular W-algebra inside the slot-tensored algebra.

States come from expanding the matrix product (t + A^[1]) ... (t + A^[l])
over the noncommuting alphabet {t} + {matrix entries E^[s]_{i,j}[-1]}, where
the formal symbol t satisfies X[-d] t = t X[-d] + alpha*d X[-d-1].  Collecting
the coefficient of t^{l-r} gives the degree-r generator matrix; in the graded
case the matrix carries (-1)^{p(row)} entry prefactors that are stripped at
the end.  Mode operators for r = 1, 2 are explicit series; at level zero the
generators of every degree collapse to ordered slot chains.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .enveloping import Element, Word, normal_order
from .liealg import SessionConfig, Sym
from .operators import (
    FiniteOp, Op, SeriesExpr, SeriesOp, SeriesTerm, fspec, op_scale, op_sum,
    series, sterm, zero_op,
)
from .scalars import ONE, Scalar, ZERO
from .vacuum import ModuleVector

TAU = None  # marker in expansion words


def _parity_blocks(session: SessionConfig) -> List[Tuple[int, int, int]]:
    """(lo, hi, sign) pieces of the index range 1..size, sign = (-1)^{p(a)}."""
    if not session.is_super:
        return [(1, session.size, 1)]
    return [(1, session.m, 1), (session.m + 1, session.m + session.n, -1)]


class WTable:
    """Generator states and mode operators over a contiguous slot block.

    ``block = (start, length)`` selects the slots start .. start+length-1 of
    the ambient session; the default is the full slot range.  Inside the
    block the construction is that of an l'=length algebra, which is what the
    split-and-compare checks for parabolic inclusions need.
    """

    def __init__(self, session: SessionConfig, block: Optional[Tuple[int, int]] = None):
        self.session = session
        start, length = block if block else (1, session.l)
        if start < 1 or start + length - 1 > session.l:
            raise ValueError(f"block {block} outside 1..{session.l}")
        self.start = start
        self.ll = length
        self.slots = tuple(range(start, start + length))
        self._states: Optional[Dict[Tuple[int, int, int], ModuleVector]] = None
        self._op_cache: Dict[tuple, Op] = {}

    # -- states ------------------------------------------------------------

    def states(self) -> Dict[Tuple[int, int, int], ModuleVector]:
        if self._states is None:
            buckets = _expand_miura(self.session, self.slots, tau_coeff=1, collect="left")
            self._states = _strip_row_signs(self.session, buckets)
        return self._states

    def state(self, r: int, i: int, j: int) -> ModuleVector:
        return self.states().get((r, i, j), ModuleVector())

    # -- degree-1 generators (finite elements) --------------------------------

    def w1_elem(self, i: int, j: int, m: int) -> Element:
        terms = {(Sym(s, m, i, j),): ONE for s in self.slots}
        return Element(self.session, terms)

    def w1_op(self, i: int, j: int, m: int) -> Op:
        key = ("w1", i, j, m)
        if key not in self._op_cache:
            self._op_cache[key] = FiniteOp(self.w1_elem(i, j, m))
        return self._op_cache[key]

    # -- degree-2 generators ---------------------------------------------------

    def w2_series(self, i: int, j: int, m: int) -> SeriesExpr:
        ses = self.session
        terms: List[SeriesTerm] = []
        for k1, s1 in enumerate(self.slots):
            for s2 in self.slots[k1 + 1:]:
                for lo, hi, sign in _parity_blocks(ses):
                    terms.append(sterm(
                        Scalar.rational(sign),
                        [fspec(s1, i, "a", (m, {"r": 1})),
                         fspec(s2, "a", j, (0, {"r": -1}))],
                        [("a", ("range", lo, hi)), ("r", ("z",))],
                    ))
        for k, s in enumerate(self.slots):
            weight = self.ll - 1 - k
            if weight:
                coeff = ses.alpha.scale(-(m + 1) * weight)
                if coeff:
                    terms.append(sterm(coeff, [fspec(s, i, j, m)]))
        return series(terms, f"W2_{i}{j}({m})")

    def w2_op(self, i: int, j: int, m: int) -> Op:
        key = ("w2", i, j, m)
        if key not in self._op_cache:
            if self.ll == 1:
                self._op_cache[key] = zero_op()
            else:
                self._op_cache[key] = SeriesOp(self.session, self.w2_series(i, j, m))
        return self._op_cache[key]

    def w_mode(self, r: int, i: int, j: int, m: int) -> Op:
        if r == 1:
            return self.w1_op(i, j, m)
        if r == 2:
            return self.w2_op(i, j, m)
        raise ValueError("explicit mode operators exist for r in {1, 2} only")

    def w_mode_alpha0(self, r: int, i: int, j: int, m: int) -> Op:
        """Mode operators of every degree, valid only at level zero."""
        ses = self.session
        if ses.alpha:
            raise ValueError("all-degree mode formula requires alpha = 0")
        if not 1 <= r <= self.ll:
            raise ValueError(f"degree r={r} outside 1..{self.ll}")
        if r == 1:
            return self.w1_op(i, j, m)
        key = ("w0", r, i, j, m)
        if key in self._op_cache:
            return self._op_cache[key]
        terms: List[SeriesTerm] = []
        mode_names = [f"m{k}" for k in range(1, r)]
        for chain_slots in itertools.combinations(self.slots, r):
            for blocks in itertools.product(_parity_blocks(ses), repeat=r - 1):
                sign = 1
                indices: List[tuple] = []
                for k, (lo, hi, sgn) in enumerate(blocks):
                    sign *= sgn
                    indices.append((f"a{k + 1}", ("range", lo, hi)))
                for name in mode_names:
                    indices.append((name, ("z",)))
                rows = [i] + [f"a{k + 1}" for k in range(r - 1)]
                cols = [f"a{k + 1}" for k in range(r - 1)] + [j]
                factors = []
                for k in range(r):
                    if k < r - 1:
                        mode = (0, {mode_names[k]: 1})
                    else:
                        mode = (m, {name: -1 for name in mode_names})
                    factors.append(fspec(chain_slots[k], rows[k], cols[k], mode))
                terms.append(sterm(Scalar.rational(sign), factors, indices))
        op = SeriesOp(ses, series(terms, f"W{r}_{i}{j}({m})@al0"))
        self._op_cache[key] = op
        return op

    # -- quadratic sums over degree-1 generators ---------------------------------

    def w1_pair(
        self,
        idx1: Tuple,
        idx2: Tuple,
        mode1: Tuple[int, int],
        mode2: Tuple[int, int],
        a_range: Optional[Tuple[int, int]] = None,
        signed: bool = True,
        dspec: tuple = ("ge", 0),
        poly: tuple = (),
    ) -> List[SeriesTerm]:
        """Series terms for sum_d sum_a W1_{idx1}(mode1) W1_{idx2}(mode2).

        ``idx`` entries are matrix indices or the literal "a"; modes are
        (offset, slope) in the summation index d.  In the graded case the
        summed index contributes (-1)^{p(a)} when ``signed``.
        """
        ses = self.session
        uses_a = "a" in idx1 or "a" in idx2
        lo0, hi0 = a_range if a_range else (1, ses.size)
        if uses_a and signed:
            blocks = [(max(blo, lo0), min(bhi, hi0), sgn)
                      for blo, bhi, sgn in _parity_blocks(ses)]
        else:
            blocks = [(lo0, hi0, 1)]
        terms = []
        d1, c1 = mode1
        d2, c2 = mode2
        for s1 in self.slots:
            for s2 in self.slots:
                if not uses_a:
                    terms.append(sterm(
                        ONE,
                        [fspec(s1, idx1[0], idx1[1], (d1, {"d": c1})),
                         fspec(s2, idx2[0], idx2[1], (d2, {"d": c2}))],
                        [("d", dspec)], poly=poly))
                    continue
                for lo, hi, sign in blocks:
                    if lo > hi:
                        continue
                    terms.append(sterm(
                        Scalar.rational(sign),
                        [fspec(s1, idx1[0], idx1[1], (d1, {"d": c1})),
                         fspec(s2, idx2[0], idx2[1], (d2, {"d": c2}))],
                        [("a", ("range", lo, hi)), ("d", dspec)], poly=poly))
        return terms

    # -- commuting elements ----------------------------------------------------

    def a_op(self, i: int) -> Op:
        """sum_{d>=0} sum_{a<i} W1_{i,a}(-d) W1_{a,i}(d), graded-signed."""
        key = ("A", i)
        if key not in self._op_cache:
            if i == 1:
                self._op_cache[key] = zero_op()
            else:
                terms = self.w1_pair((i, "a"), ("a", i), (0, -1), (0, 1),
                                     a_range=(1, i - 1))
                self._op_cache[key] = SeriesOp(self.session, series(terms, f"A_{i}"))
        return self._op_cache[key]

    def b_op(self, i: int) -> Op:
        """sum_{d>=0} sum_{a>=i} W1_{i,a}(-d-1) W1_{a,i}(d+1), graded-signed."""
        key = ("B", i)
        if key not in self._op_cache:
            terms = self.w1_pair((i, "a"), ("a", i), (-1, -1), (1, 1),
                                 a_range=(i, self.session.size))
            self._op_cache[key] = SeriesOp(self.session, series(terms, f"B_{i}"))
        return self._op_cache[key]

    def d_op(self, i: int) -> Op:
        key = ("D", i)
        if key not in self._op_cache:
            self._op_cache[key] = op_sum(
                self.w2_op(i, i, 0),
                op_scale(Scalar.rational(-1), op_sum(self.a_op(i), self.b_op(i))),
            )
        return self._op_cache[key]

    def h_prime(self) -> Op:
        """The diagonal corner combination whose bracket shifts diagonal modes."""
        key = ("Hp",)
        if key not in self._op_cache:
            ses = self.session
            nn = ses.size
            quad = self.w1_elem(nn, nn, 0) * (
                self.w1_elem(1, 1, 0) - Element.unit(ses, ses.alpha))
            tail = self.w1_pair((nn, nn), (nn, nn), (0, -1), (0, 1)) + [
                sterm(Scalar.rational(-1), t.factors, t.indices, t.poly)
                for t in self.w1_pair((1, 1), (1, 1), (-1, -1), (1, 1))]
            self._op_cache[key] = op_sum(
                self.w2_op(nn, nn, 0),
                op_scale(Scalar.rational(-1), self.w2_op(1, 1, 0)),
                FiniteOp(quad),
                op_scale(Scalar.rational(-1), SeriesOp(ses, series(tail, "Hp-tail"))),
            )
        return self._op_cache[key]


# -- variant generator conventions ---------------------------------------------


def variant_states(session: SessionConfig, kind: str) -> Dict[Tuple[int, int, int], ModuleVector]:
    """States under the two alternative collection conventions.

    kind "AM": expand (-t + A^[1]) ... (-t + A^[l]) and collect (-t)^{l-r} on
    the right of a transposed coefficient matrix.  kind "U": same product as
    the main convention but with t^{l-r} collected on the right.
    """
    if session.is_super:
        raise ValueError("variant conventions are defined for the plain case")
    slots = tuple(range(1, session.l + 1))
    if kind == "U":
        buckets = _expand_miura(session, slots, tau_coeff=1, collect="right")
        return _strip_row_signs(session, buckets)
    if kind == "AM":
        # coefficient matrix of (-t)^{l-r} with entries E_{col,row}[-1]
        buckets = _expand_miura(session, slots, tau_coeff=-1, collect="right",
                                transpose_entries=True)
        out: Dict[Tuple[int, int, int], ModuleVector] = {}
        for (r, i, j), vec in _strip_row_signs(session, buckets).items():
            sign = -1 if (session.l - r) % 2 else 1
            out[(r, i, j)] = vec.scale(Scalar.rational(sign))
        return out
    raise ValueError(f"unknown variant kind {kind!r}")


def translation_derivative(session: SessionConfig, vec: ModuleVector) -> ModuleVector:
    """The derivation X(-d) -> d X(-d-1), extended by Leibniz; kills the vacuum."""
    out: Dict[Word, Scalar] = {}
    for word, coeff in vec.terms.items():
        for k, s in enumerate(word):
            nw = word[:k] + (Sym(s.slot, s.mode - 1, s.row, s.col),) + word[k + 1:]
            for w2, c2 in normal_order(session, nw, coeff.scale(-s.mode)).items():
                acc = out.get(w2)
                if acc is None:
                    out[w2] = c2
                else:
                    acc = acc + c2
                    if acc:
                        out[w2] = acc
                    else:
                        del out[w2]
    return ModuleVector(out)


def reverse_slots_vector(session: SessionConfig, vec: ModuleVector) -> ModuleVector:
    """Slot reversal s -> l-s+1 on a module vector, restraightened."""
    l = session.l
    out: Dict[Word, Scalar] = {}
    for word, coeff in vec.terms.items():
        relabeled = tuple(Sym(l - s.slot + 1, s.mode, s.row, s.col) for s in word)
        for w2, c2 in normal_order(session, relabeled, coeff).items():
            acc = out.get(w2)
            if acc is None:
                out[w2] = c2
            else:
                acc = acc + c2
                if acc:
                    out[w2] = acc
                else:
                    del out[w2]
    return ModuleVector(out)


# -- expansion engine ---------------------------------------------------------------


def _expand_miura(session: SessionConfig, slots: Sequence[int], tau_coeff: int,
                  collect: str, transpose_entries: bool = False,
                  ) -> Dict[Tuple[int, int, int], Dict[Word, Scalar]]:
    """Expand the product over ``slots`` and bucket by residual t-power.

    Returns (r, i, j) -> {monomial word: coefficient}; entry (i,j) still
    carries the graded row prefactors of the matrix convention.
    """
    size = session.size
    ll = len(slots)
    alpha = session.alpha
    buckets: Dict[Tuple[int, int, int], Dict[Word, Scalar]] = {}

    for r0 in range(1, ll + 1):
        for subset in itertools.combinations(range(ll), r0):
            for chain in itertools.product(range(1, size + 1), repeat=r0 + 1):
                sign = 1
                if session.is_super:
                    for row in chain[:-1]:
                        if session.parity(row):
                            sign = -sign
                base = Scalar.rational(sign * tau_coeff ** (ll - r0))
                word: List = []
                pos = 0
                for k in range(ll):
                    if pos < r0 and subset[pos] == k:
                        a, b = chain[pos], chain[pos + 1]
                        if transpose_entries:
                            a, b = b, a
                        word.append((slots[k], a, b, 1))
                        pos += 1
                    else:
                        word.append(TAU)
                i, j = chain[0], chain[-1]
                for taus, factors, coeff in _push_taus(word, base, alpha, collect):
                    r = ll - taus
                    mono = tuple(Sym(slot, -d, a, b) for slot, a, b, d in factors)
                    bucket = buckets.setdefault((r, i, j), {})
                    acc = bucket.get(mono)
                    if acc is None:
                        bucket[mono] = coeff
                    else:
                        acc = acc + coeff
                        if acc:
                            bucket[mono] = acc
                        else:
                            del bucket[mono]
    return buckets


def _push_taus(word, coeff: Scalar, alpha: Scalar, collect: str):
    """Normalize t-symbols to one side; yields (tau_count, factors, coeff)."""
    stack = [(list(word), coeff)]
    while stack:
        w, c = stack.pop()
        k = _tau_defect(w, collect)
        if k < 0:
            factors = [item for item in w if item is not TAU]
            yield w.count(TAU), factors, c
            continue
        if collect == "left":
            # pattern (X, tau): X[-d] t = t X[-d] + alpha d X[-d-1]
            x = w[k]
            swapped = w[:k] + [TAU, x] + w[k + 2:]
            slot, a, b, d = x
            absorbed = w[:k] + [(slot, a, b, d + 1)] + w[k + 2:]
            stack.append((swapped, c))
            stack.append((absorbed, c * alpha.scale(d)))
        else:
            # pattern (tau, X): t X[-d] = X[-d] t - alpha d X[-d-1]
            x = w[k + 1]
            swapped = w[:k] + [x, TAU] + w[k + 2:]
            slot, a, b, d = x
            absorbed = w[:k] + [(slot, a, b, d + 1)] + w[k + 2:]
            stack.append((swapped, c))
            stack.append((absorbed, c * alpha.scale(-d)))
    return


def _tau_defect(w, collect: str) -> int:
    if collect == "left":
        for k in range(len(w) - 1):
            if w[k] is not TAU and w[k + 1] is TAU:
                return k
    else:
        for k in range(len(w) - 1):
            if w[k] is TAU and w[k + 1] is not TAU:
                return k
    return -1


def _strip_row_signs(session: SessionConfig, buckets) -> Dict[Tuple[int, int, int], ModuleVector]:
    out: Dict[Tuple[int, int, int], ModuleVector] = {}
    for (r, i, j), terms in buckets.items():
        if not terms:
            continue
        vec = ModuleVector(dict(terms))
        if session.is_super and session.parity(i):
            vec = vec.scale(Scalar.rational(-1))
        out[(r, i, j)] = vec
    return out
