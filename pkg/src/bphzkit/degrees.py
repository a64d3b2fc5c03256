"""Degree and integrability bookkeeping.

Every symbol carries a parabolic degree r_{eps,p} computed additively:
node decorations contribute their scaled size, an edge contributes the
degree of its label minus the scaled size of its derivative decoration.
Label degrees are

    r(O) = r(H) = r0 - eps,
    r(HB) = r0 - eps + (2+d)/p      (1/inf = 0),
    r(K)  = beta0.

All arithmetic is exact rational; sign tests downstream (projections,
negative-degree selection) rely on that.  Integrability is the second
half of the grading: plain symbols are graded L^infinity, symbols with
one HB edge drop to L^p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from .trees import DecoratedTree, EdgeLabel, HB_LABEL, H_LABEL, K_LABEL, O_LABEL

__all__ = [
    "INF",
    "PValue",
    "StructureParams",
    "DegreeIndex",
    "degree",
    "degree_fn",
    "integrability",
    "label_degree",
    "inv_p",
]

INF = math.inf
PValue = Union[Fraction, float]

Rational = Union[Fraction, int, str]


def _frac(x: Rational) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _pval(p) -> PValue:
    if p in (INF, "inf", None):
        return INF
    return Fraction(p)


def inv_p(p: PValue) -> Fraction:
    """1/p with the convention 1/inf = 0."""
    return Fraction(0) if p == INF else Fraction(1, 1) / p


@dataclass(frozen=True)
class StructureParams:
    """Analytic parameters of a structure.

    d: spatial dimension (grid axes are 1+d with time first).
    s0: Sobolev index of the shift space; s0 >= -(2+d)/2.
    r0: noise degree; must satisfy r0 < -(2+d)/2 - s0.
    beta0: kernel regularity gain, in (0, 2).
    eps: degree slide >= 0.
    p: integrability in [2, inf]; INF allowed.
    C0: truncation level for tree generation.
    a, b: weight exponents (space-time and shift-norm weights).
    """

    d: int
    s0: Fraction
    r0: Fraction
    beta0: Fraction
    C0: Fraction
    eps: Fraction = Fraction(0)
    p: PValue = INF
    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "s0", _frac(self.s0))
        object.__setattr__(self, "r0", _frac(self.r0))
        object.__setattr__(self, "beta0", _frac(self.beta0))
        object.__setattr__(self, "C0", _frac(self.C0))
        object.__setattr__(self, "eps", _frac(self.eps))
        object.__setattr__(self, "p", _pval(self.p))
        object.__setattr__(self, "a", _frac(self.a))
        object.__setattr__(self, "b", _frac(self.b))
        half = Fraction(2 + self.d, 2)
        if self.s0 < -half:
            raise ValueError(f"s0 = {self.s0} below -{half}")
        if not self.r0 < -half - self.s0:
            raise ValueError(f"r0 = {self.r0} must be < {-half - self.s0}")
        if not Fraction(0) < self.beta0 < Fraction(2):
            raise ValueError(f"beta0 = {self.beta0} outside (0, 2)")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.p != INF and self.p < 2:
            raise ValueError("p must lie in [2, inf]")
        if self.a < 0 or self.b < 0:
            raise ValueError("weight exponents must be >= 0")

    @property
    def dim(self) -> int:
        return 1 + self.d

    def with_updates(self, **kw) -> "StructureParams":
        data = {
            "d": self.d, "s0": self.s0, "r0": self.r0, "beta0": self.beta0,
            "C0": self.C0, "eps": self.eps, "p": self.p, "a": self.a, "b": self.b,
        }
        data.update(kw)
        return StructureParams(**data)


def label_degree(
    label: EdgeLabel, eps: Fraction, p: PValue, params: StructureParams
) -> Fraction:
    if label is K_LABEL:
        return params.beta0
    base = params.r0 - eps
    if label is HB_LABEL:
        return base + Fraction(2 + params.d) * inv_p(p)
    return base


_ALL_LABELS = (K_LABEL, O_LABEL, H_LABEL, HB_LABEL)

_DEGREE_CACHE: dict[tuple, Fraction] = {}


def degree(
    t: DecoratedTree, eps: Fraction, p: PValue, params: StructureParams
) -> Fraction:
    """r_{eps,p}(t), exact."""
    eps = _frac(eps)
    p = _pval(p)
    key = (t, eps, p, params.r0, params.beta0, params.d)
    cached = _DEGREE_CACHE.get(key)
    if cached is not None:
        return cached
    total = Fraction(t.n.sdeg)
    for e in t.edges:
        total += (
            label_degree(e.label, eps, p, params)
            - e.dec.sdeg
            + degree(e.child, eps, p, params)
        )
    _DEGREE_CACHE[key] = total
    return total


def degree_fn(
    eps: Fraction, p: PValue, params: StructureParams
) -> "Callable[[DecoratedTree], Fraction]":
    """A memoized closure computing r_{eps,p}; keys only on the tree,
    which keeps hot loops off repeated Fraction hashing."""
    eps = _frac(eps)
    p = _pval(p)
    ldeg = {lab: label_degree(lab, eps, p, params) for lab in _ALL_LABELS}
    cache: dict[DecoratedTree, Fraction] = {}

    def rec(t: DecoratedTree) -> Fraction:
        got = cache.get(t)
        if got is not None:
            return got
        total = Fraction(t.n.sdeg)
        for e in t.edges:
            total += ldeg[e.label] - e.dec.sdeg + rec(e.child)
        cache[t] = total
        return total

    return rec


def integrability(t: DecoratedTree, p: PValue) -> PValue:
    """inf on plain symbols, p when exactly one HB edge is present."""
    n_hb = t.label_count(HB_LABEL)
    if n_hb == 0:
        return INF
    if n_hb == 1:
        return _pval(p)
    raise ValueError(f"{t!r} has {n_hb} HB edges; outside the graded families")


@dataclass(frozen=True)
class DegreeIndex:
    """A (degree, integrability) pair with the strict partial order
    (r, i) < (s, j) iff r < s and 1/i <= 1/j."""

    r: Fraction
    i: PValue

    def strictly_less(self, other: "DegreeIndex") -> bool:
        return self.r < other.r and inv_p(self.i) <= inv_p(other.i)
