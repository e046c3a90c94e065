"""The slot-tensored universal enveloping algebra.

Elements are finite linear combinations of normally ordered words of mode
symbols.  Words are kept sorted by the key (slot, mode, row, col); adjacent
out-of-order factors x, y are rewritten through
x*y = (-1)^{|x||y|} y*x + [x, y], and odd squares reduce via x*x = [x,x]/2.
Each rewrite either shortens a produced word or lowers its inversion count,
so straightening terminates with a unique normal form.
"""
from __future__ import annotations

from typing import Dict, Iterable, Optional, Sequence, Tuple

from .liealg import SessionConfig, Sym, bracket_sym
from .scalars import HALF, ONE, Scalar, ZERO

Word = Tuple[Sym, ...]
UNIT: Word = ()


def _first_defect(session: SessionConfig, word: Word, reverse: bool) -> int:
    """Index of the first adjacent pair needing a rewrite, or -1."""
    rng = range(len(word) - 2, -1, -1) if reverse else range(len(word) - 1)
    for k in rng:
        x, y = word[k], word[k + 1]
        if x > y:
            return k
        if x == y and session.sym_parity(x):
            return k
    return -1


def normal_order(
    session: SessionConfig,
    word: Sequence[Sym],
    coeff: Scalar = ONE,
    strategy: str = "leftmost",
) -> Dict[Word, Scalar]:
    """Straighten a word into its normal form, as a word->coefficient map.

    ``strategy`` picks which admissible rewrite fires first; any choice gives
    the same normal form (checked by the confluence property test).
    """
    reverse = strategy == "rightmost"
    out: Dict[Word, Scalar] = {}
    stack = [(tuple(word), coeff)]
    while stack:
        w, c = stack.pop()
        if not c:
            continue
        k = _first_defect(session, w, reverse)
        if k < 0:
            acc = out.get(w)
            if acc is None:
                out[w] = c
            else:
                acc = acc + c
                if acc:
                    out[w] = acc
                else:
                    del out[w]
            continue
        x, y = w[k], w[k + 1]
        head, tail = w[:k], w[k + 2:]
        linear, central = bracket_sym(session, x, y)
        if x == y:
            # odd square: x*x = [x,x]/2
            half = c * HALF
            for z, sgn in linear:
                stack.append((head + (z,) + tail, half.scale(sgn)))
            if central:
                stack.append((head + tail, half * central))
            continue
        koszul = -1 if (session.sym_parity(x) & session.sym_parity(y)) else 1
        stack.append((head + (y, x) + tail, c.scale(koszul)))
        for z, sgn in linear:
            stack.append((head + (z,) + tail, c.scale(sgn)))
        if central:
            stack.append((head + tail, c * central))
    return out


class Element:
    """A finite linear combination of normally ordered words.

    Carries its session: the bracket (and hence the normal form) depends on
    the block sizes and the level.
    """

    __slots__ = ("session", "terms")

    def __init__(self, session: SessionConfig, terms: Optional[Dict[Word, Scalar]] = None):
        self.session = session
        self.terms = terms if terms is not None else {}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(session: SessionConfig) -> "Element":
        return Element(session)

    @staticmethod
    def unit(session: SessionConfig, coeff: Scalar = ONE) -> "Element":
        return Element(session, {UNIT: coeff} if coeff else {})

    @staticmethod
    def from_word(session: SessionConfig, word: Sequence[Sym], coeff: Scalar = ONE) -> "Element":
        return Element(session, normal_order(session, word, coeff))

    @staticmethod
    def from_sym(session: SessionConfig, sym: Sym, coeff: Scalar = ONE) -> "Element":
        return Element(session, {(sym,): coeff} if coeff else {})

    # -- linear structure ----------------------------------------------------

    def _iadd_term(self, word: Word, coeff: Scalar):
        acc = self.terms.get(word)
        if acc is None:
            self.terms[word] = coeff
        else:
            acc = acc + coeff
            if acc:
                self.terms[word] = acc
            else:
                del self.terms[word]

    def __add__(self, other: "Element") -> "Element":
        out = Element(self.session, dict(self.terms))
        for word, coeff in other.terms.items():
            out._iadd_term(word, coeff)
        return out

    def __neg__(self) -> "Element":
        return Element(self.session, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "Element") -> "Element":
        return self + (-other)

    def scale(self, coeff: Scalar) -> "Element":
        coeff = Scalar.of(coeff)
        if not coeff:
            return Element(self.session)
        if coeff is ONE:
            return self
        return Element(self.session, {w: c * coeff for w, c in self.terms.items()})

    def __mul__(self, other: "Element") -> "Element":
        out = Element(self.session)
        for wa, ca in self.terms.items():
            for wb, cb in other.terms.items():
                c = ca * cb
                if not c:
                    continue
                if not wa or not wb:
                    out._iadd_term(wa + wb, c)
                    continue
                for word, coeff in normal_order(self.session, wa + wb, c).items():
                    out._iadd_term(word, coeff)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Element):
            return NotImplemented
        return self.session == other.session and self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- grading --------------------------------------------------------------

    def parity(self) -> Optional[int]:
        """0 or 1 for homogeneous elements, None for mixed (unit counts even)."""
        seen = None
        for word in self.terms:
            p = 0
            for sym in word:
                p ^= self.session.sym_parity(sym)
            if seen is None:
                seen = p
            elif seen != p:
                return None
        return 0 if seen is None else seen

    # -- products with signs -----------------------------------------------------

    def commutator(self, other: "Element") -> "Element":
        """Super commutator ab - (-1)^{|a||b|} ba.

        Plain ab - ba when either side is even; mixed-parity inputs where the
        sign would be ambiguous are rejected.
        """
        pa, pb = self.parity(), other.parity()
        if pa == 0 or pb == 0:
            return self * other - other * self
        if pa is None or pb is None:
            raise ValueError("super commutator needs homogeneous (or even) inputs")
        return self * other + other * self

    def anticommutator(self, other: "Element") -> "Element":
        return self * other + other * self

    # -- automorphisms --------------------------------------------------------

    def eta_shift(self, beta: Scalar, slots: Optional[Iterable[int]] = None) -> "Element":
        """Shift diagonal zero modes: E_{i,i}(0) += (-1)^{p(i)} beta on the given slots."""
        chosen = set(range(1, self.session.l + 1)) if slots is None else set(slots)
        shifts = {s: beta for s in chosen}
        return self._eta(shifts)

    def eta_l(self) -> "Element":
        """The staircase twist: slot s is shifted by (l - s) * alpha."""
        l, alpha = self.session.l, self.session.alpha
        shifts = {s: alpha.scale(l - s) for s in range(1, l)}
        return self._eta(shifts)

    def _eta(self, shifts: Dict[int, Scalar]) -> "Element":
        out = Element(self.session)
        for word, coeff in self.terms.items():
            for nw, nc in eta_expand_word(self.session, word, coeff, shifts):
                if nw and _first_defect(self.session, nw, False) >= 0:
                    for w2, c2 in normal_order(self.session, nw, nc).items():
                        out._iadd_term(w2, c2)
                else:
                    out._iadd_term(nw, nc)
        return out

    def reverse_slots(self) -> "Element":
        """The involution slot s -> l - s + 1, restraightened."""
        l = self.session.l
        out = Element(self.session)
        for word, coeff in self.terms.items():
            relabeled = tuple(Sym(l - s.slot + 1, s.mode, s.row, s.col) for s in word)
            for w2, c2 in normal_order(self.session, relabeled, coeff).items():
                out._iadd_term(w2, c2)
        return out

    # -- rendering / serialization ----------------------------------------------

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for word in sorted(self.terms):
            body = "*".join(sym.render() for sym in word) if word else "1"
            parts.append(f"({self.terms[word]})*{body}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"Element[{self.render()}]"

    def to_json(self) -> list:
        rows = []
        for word in sorted(self.terms):
            rows.append({
                "word": [[s.slot, s.row, s.col, s.mode] for s in word],
                "coeff": self.terms[word].to_json(),
            })
        return rows

    @staticmethod
    def from_json(session: SessionConfig, rows: list) -> "Element":
        terms: Dict[Word, Scalar] = {}
        for row in rows:
            word = tuple(Sym(slot, mode, i, j) for slot, i, j, mode in row["word"])
            terms[word] = Scalar.from_json(row["coeff"])
        return Element(session, terms)


def eta_expand_word(
    session: SessionConfig, word: Word, coeff: Scalar, shifts: Dict[int, Scalar]
):
    """Expand the diagonal-shift substitution over one word.

    Yields (subword, coefficient) pairs; dropped factors are diagonal zero
    modes replaced by their scalar shift.  Subwords of an ordered word stay
    ordered, so no restraightening is needed for the generic case.
    """
    hot = [
        k for k, s in enumerate(word)
        if s.mode == 0 and s.row == s.col and s.slot in shifts and shifts[s.slot]
    ]
    if not hot:
        yield word, coeff
        return
    options = []
    for k in hot:
        s = word[k]
        shift = shifts[s.slot]
        if session.parity(s.row):
            shift = -shift
        options.append((k, shift))
    for mask in range(1 << len(options)):
        drop = set()
        c = coeff
        for bit, (k, shift) in enumerate(options):
            if mask >> bit & 1:
                drop.add(k)
                c = c * shift
        yield tuple(s for k, s in enumerate(word) if k not in drop), c
