"""Formal monomials in twisted parameters.

Symbols come in four kinds: per-step level parameters, per-step edge
parameters, modular (node smoothing) parameters, and the conjugate-divisor
parameter.  A monomial is a multiset of symbols with a flag recording
multiplication by an unspecified unit; divisibility compares supports with
multiplicities and ignores the flags.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

LEVEL = "level"
EDGE = "edge"
MODULAR = "modular"
KAPPA = "kappa"

_KINDS = (LEVEL, EDGE, MODULAR, KAPPA)


@dataclass(frozen=True, order=True)
class ParamSymbol:
    kind: str
    step: Optional[int]
    index: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind in (LEVEL, EDGE) and self.step is None:
            raise ValueError("level and edge symbols carry a step")

    def label(self) -> str:
        if self.kind == LEVEL:
            return f"xi[{self.step}]lvl({self.index})"
        if self.kind == EDGE:
            return f"xi[{self.step}]edge({self.index})"
        if self.kind == MODULAR:
            return f"zeta({self.index})"
        return "kappa"


def level_symbol(step: int, level: int) -> ParamSymbol:
    return ParamSymbol(LEVEL, step, str(level))


def edge_symbol(step: int, edge) -> ParamSymbol:
    name = "|".join(sorted(edge)) if isinstance(edge, frozenset) else str(edge)
    return ParamSymbol(EDGE, step, name)


def modular_symbol(edge) -> ParamSymbol:
    name = "|".join(sorted(edge)) if isinstance(edge, frozenset) else str(edge)
    return ParamSymbol(MODULAR, None, name)


def kappa_symbol() -> ParamSymbol:
    return ParamSymbol(KAPPA, None, "")


@dataclass(frozen=True)
class Monomial:
    symbols: tuple  # sorted (ParamSymbol, multiplicity) pairs
    unit_flag: bool = False

    @staticmethod
    def of(symbols: Iterable[ParamSymbol], unit_flag: bool = False) -> "Monomial":
        counts = Counter(symbols)
        return Monomial(tuple(sorted(counts.items())), unit_flag)

    @staticmethod
    def one(unit_flag: bool = False) -> "Monomial":
        return Monomial((), unit_flag)

    def counter(self) -> Counter:
        return Counter(dict(self.symbols))

    def __mul__(self, other: "Monomial") -> "Monomial":
        counts = self.counter() + other.counter()
        return Monomial(tuple(sorted(counts.items())),
                        self.unit_flag or other.unit_flag)

    def is_one(self) -> bool:
        return not self.symbols

    def degree(self) -> int:
        return sum(m for _, m in self.symbols)

    def support(self) -> frozenset:
        return frozenset(s for s, _ in self.symbols)

    def label(self) -> str:
        if not self.symbols:
            core = "1"
        else:
            parts = []
            for s, m in self.symbols:
                parts.append(s.label() if m == 1 else f"{s.label()}^{m}")
            core = "*".join(parts)
        return ("u*" if self.unit_flag else "") + core


def divides(a: Monomial, b: Monomial) -> bool:
    """Multiset inclusion of the symbols of a in those of b; unit flags
    are ignored."""
    cb = b.counter()
    return all(cb.get(s, 0) >= m for s, m in a.symbols)
