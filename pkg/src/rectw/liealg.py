"""Structure constants of the slot-tensored affine gl algebra.

A session fixes the matrix block sizes (m, n), the number of tensor slots l
and the level parameter.  ``m = 0`` selects the plain gl_n case (every index
even); ``m > 0`` selects the graded gl_{m|n} case with indices 1..m even and
m+1..m+n odd.  The bracket carries the central term of the level-shifted
bilinear form, so central elements never appear as symbols: the session's
level turns them into scalars immediately.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Tuple

from .scalars import AL, Scalar, ZERO, epsilon_of


class ConfigError(ValueError):
    """Invalid session parameters."""


class Sym(NamedTuple):
    """One affine generator E^[slot]_{row,col}(mode).

    Field order (slot, mode, row, col) is the normal-order sort key:
    creation modes (negative) sort left of annihilation modes within a slot.
    """

    slot: int
    mode: int
    row: int
    col: int

    def render(self) -> str:
        return f"E[{self.slot}]_{{{self.row},{self.col}}}({self.mode})"


def E(slot: int, row: int, col: int, mode: int) -> Sym:
    return Sym(slot, mode, row, col)


@dataclass(frozen=True)
class SessionConfig:
    n: int
    m: int = 0
    l: int = 1
    alpha: Scalar = AL
    require_yangian: bool = False

    def __post_init__(self):
        if self.n < 1 or self.m < 0 or self.l < 1:
            raise ConfigError(f"bad sizes m={self.m}, n={self.n}, l={self.l}")
        if self.require_yangian:
            if self.m == 0 and self.n < 3:
                raise ConfigError("plain case needs n >= 3 for the Yangian suites")
            if self.m > 0 and (self.m < 2 or self.n < 2 or self.m == self.n):
                raise ConfigError("graded case needs m, n >= 2 and m != n")

    @property
    def size(self) -> int:
        """Number of matrix indices per slot."""
        return self.n if self.m == 0 else self.m + self.n

    @property
    def is_super(self) -> bool:
        return self.m > 0

    def parity(self, i: int) -> int:
        """Index parity: 0 on the first block, 1 on the second."""
        if self.m == 0:
            return 0
        return 0 if i <= self.m else 1

    def sym_parity(self, sym: Sym) -> int:
        if self.m == 0:
            return 0
        return (self.parity(sym.row) + self.parity(sym.col)) & 1

    def epsilon(self) -> Scalar:
        """The eliminated parameter, already substituted everywhere it occurs."""
        shift = self.n if self.m == 0 else self.m - self.n
        return epsilon_of(self.alpha, shift)

    def specialized(self, **assignments) -> "SessionConfig":
        return SessionConfig(
            n=self.n,
            m=self.m,
            l=self.l,
            alpha=self.alpha.specialize(assignments),
            require_yangian=self.require_yangian,
        )

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "l": self.l, "alpha": self.alpha.to_json()}

    @staticmethod
    def from_json(doc: dict | str, require_yangian: bool = False) -> "SessionConfig":
        """Build a session from {m, n, l, alpha, mode}.

        ``alpha`` may be "symbolic", a rational string "P/Q", a number, or the
        lossless array form; ``mode`` ("plain"/"super") is advisory and checked
        against m.
        """
        if isinstance(doc, str):
            doc = json.loads(doc)
        alpha = doc.get("alpha", "symbolic")
        if alpha == "symbolic" or alpha is None:
            alpha_s = AL
        elif isinstance(alpha, str):
            alpha_s = Scalar.rational(Fraction(alpha))
        elif isinstance(alpha, (int, float)):
            alpha_s = Scalar.rational(Fraction(alpha).limit_denominator(10**9))
        else:
            alpha_s = Scalar.from_json(alpha)
        m = int(doc.get("m", 0))
        mode = doc.get("mode")
        if mode == "super" and m == 0:
            raise ConfigError("mode=super requires m > 0")
        if mode == "plain" and m != 0:
            raise ConfigError("mode=plain requires m = 0")
        return SessionConfig(
            n=int(doc["n"]), m=m, l=int(doc.get("l", 1)),
            alpha=alpha_s, require_yangian=require_yangian,
        )


def kappa_tilde(session: SessionConfig, a: Tuple[int, int], b: Tuple[int, int]) -> Scalar:
    """Value of the level bilinear form on matrix units (a=(i,j), b=(p,q))."""
    i, j = a
    p, q = b
    out = ZERO
    if i == q and j == p:
        sign = -1 if session.parity(i) else 1
        out = out + session.alpha.scale(sign)
    if i == j and p == q:
        sign = -1 if (session.parity(i) + session.parity(p)) & 1 else 1
        out = out + Scalar.rational(sign)
    return out


# Bracket results are (linear part, central scalar); the linear part is a
# tuple of (Sym, +-1).  Cached: the same few thousand pairs dominate every
# straightening run.
@lru_cache(maxsize=None)
def bracket_sym(session: SessionConfig, x: Sym, y: Sym):
    if x.slot != y.slot:
        return (), ZERO
    i, j, d = x.row, x.col, x.mode
    p, q, d2 = y.row, y.col, y.mode
    linear = []
    if p == j:
        linear.append((Sym(x.slot, d + d2, i, q), 1))
    if i == q:
        if session.m and (session.sym_parity(x) & session.sym_parity(y)):
            sign = 1
        else:
            sign = -1
        if linear and linear[0][0] == Sym(x.slot, d + d2, p, j):
            merged = linear[0][1] + sign
            linear = [(linear[0][0], merged)] if merged else []
        else:
            linear.append((Sym(x.slot, d + d2, p, j), sign))
    central = ZERO
    if d + d2 == 0 and d != 0:
        kt = kappa_tilde(session, (i, j), (p, q))
        if kt:
            central = kt.scale(d)
    return tuple(linear), central
