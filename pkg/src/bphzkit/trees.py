"""Decorated rooted trees with multiindex decorations.

The objects here are finite rooted trees whose nodes carry polynomial
decorations (multiindices over 1+d space-time directions, time counting
twice in the parabolic size) and whose edges carry a label and a
derivative decoration.  Four edge labels exist: ``K`` for kernel edges,
``O`` for noise edges, and two shifted copies ``H`` and ``HB`` used when
noise edges are redirected onto a Cameron-Martin shift.  Noise-type
edges are always leaf edges with zero decoration.

Trees are immutable values identified up to planar order: the
constructor sorts children by a recursive lexicographic key and interns
the result, so structural equality is pointer equality and trees can be
used as dict keys everywhere downstream.  Symmetry factors are never
folded into coefficients; a :class:`FormalSum` merges only bitwise
identical canonical trees.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, Sequence, Union

Scalar = Union[Fraction, int, float, complex]

__all__ = [
    "MultiIndex",
    "EdgeLabel",
    "Edge",
    "DecoratedTree",
    "FormalSum",
    "scaled_size",
    "canonicalize",
    "tree_product",
    "tree_product_many",
    "graft",
    "noise_edges",
    "shift_edges",
    "bare_node",
    "unit_tree",
    "x_power",
    "x_basis",
    "multiindices_of_size_at_most",
    "violates_noise_leaf_rule",
    "has_decorated_noise_edge",
    "contains_kernel_leaf",
    "NOISE_LABELS",
]


class MultiIndex(tuple):
    """A multiindex k in N^{1+d}; index 0 is the time direction."""

    __slots__ = ()

    def __new__(cls, entries: Iterable[int]) -> "MultiIndex":
        tup = tuple(int(e) for e in entries)
        if any(e < 0 for e in tup):
            raise ValueError(f"multiindex entries must be >= 0, got {tup}")
        if not tup:
            raise ValueError("multiindex needs at least one entry")
        return super().__new__(cls, tup)

    @classmethod
    @lru_cache(maxsize=None)
    def zero(cls, dim: int) -> "MultiIndex":
        return cls((0,) * dim)

    @classmethod
    @lru_cache(maxsize=None)
    def basis(cls, dim: int, j: int) -> "MultiIndex":
        """e_j, 0-based: basis(dim, 0) is the time direction."""
        if not 0 <= j < dim:
            raise ValueError(f"basis index {j} out of range for dim {dim}")
        return cls(tuple(1 if i == j else 0 for i in range(dim)))

    @property
    def dim(self) -> int:
        return len(self)

    @property
    def sdeg(self) -> int:
        """Parabolic size 2*k_1 + sum_{j>=2} k_j."""
        return 2 * self[0] + sum(self[1:])

    @property
    def is_zero(self) -> bool:
        return not any(self)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":  # type: ignore[override]
        self._check_dim(other)
        return tuple.__new__(MultiIndex, tuple(a + b for a, b in zip(self, other)))

    def sub(self, other: "MultiIndex") -> "MultiIndex":
        """Componentwise difference; raises if any entry would go negative."""
        self._check_dim(other)
        diff = tuple(a - b for a, b in zip(self, other))
        if any(e < 0 for e in diff):
            raise ValueError(f"difference {diff} has a negative entry")
        return tuple.__new__(MultiIndex, diff)

    def leq(self, other: "MultiIndex") -> bool:
        """Componentwise partial order."""
        self._check_dim(other)
        return all(a <= b for a, b in zip(self, other))

    def factorial(self) -> int:
        out = 1
        for e in self:
            out *= factorial(e)
        return out

    def binom(self, lower: "MultiIndex") -> int:
        """Product of componentwise binomials binom(self, lower)."""
        self._check_dim(lower)
        out = 1
        for a, b in zip(self, lower):
            if b > a:
                return 0
            out *= comb(a, b)
        return out

    def iter_leq(self) -> Iterator["MultiIndex"]:
        """All l with l <= self componentwise."""
        if self.is_zero:
            yield self
            return
        for combo in itertools.product(*(range(e + 1) for e in self)):
            yield tuple.__new__(MultiIndex, combo)

    def _check_dim(self, other: "MultiIndex") -> None:
        if len(self) != len(other):
            raise ValueError(f"dimension mismatch: {len(self)} vs {len(other)}")

    def __repr__(self) -> str:
        return f"MultiIndex{tuple(self)}"


def scaled_size(k: MultiIndex) -> int:
    """Parabolic size |k|_s = 2 k_1 + sum_{j>=2} k_j."""
    return k.sdeg


@lru_cache(maxsize=None)
def multiindices_of_size_at_most(dim: int, bound: int) -> tuple[MultiIndex, ...]:
    """All k in N^dim with |k|_s <= bound, ordered by (size, entries)."""
    if bound < 0:
        return ()
    out: list[MultiIndex] = []
    span = [range(bound // 2 + 1)] + [range(bound + 1)] * (dim - 1)
    for combo in itertools.product(*span):
        k = MultiIndex(combo)
        if k.sdeg <= bound:
            out.append(k)
    out.sort(key=lambda k: (k.sdeg, tuple(k)))
    return tuple(out)


class EdgeLabel:
    """One of the four edge types K, O, H, HB.

    K is the kernel type; O the driving noise; H and HB the plain and
    integrability-lowered shift types.  Instances are singletons, ordered
    K < O < H < HB for canonical sorting.
    """

    __slots__ = ("name", "index")
    _registry: dict[str, "EdgeLabel"] = {}

    def __init__(self, name: str, index: int):
        self.name = name
        self.index = index
        EdgeLabel._registry[name] = self

    @classmethod
    def from_name(cls, name: str) -> "EdgeLabel":
        try:
            return cls._registry[name]
        except KeyError:
            raise ValueError(f"unknown edge label {name!r}") from None

    def __repr__(self) -> str:
        return f"EdgeLabel.{self.name}"

    def __reduce__(self):
        return (EdgeLabel.from_name, (self.name,))


K_LABEL = EdgeLabel("K", 0)
O_LABEL = EdgeLabel("O", 1)
H_LABEL = EdgeLabel("H", 2)
HB_LABEL = EdgeLabel("HB", 3)
NOISE_LABELS = (O_LABEL, H_LABEL, HB_LABEL)


class Edge:
    """An edge of a decorated tree: (label, derivative decoration, subtree)."""

    __slots__ = ("label", "dec", "child", "_key")

    def __init__(self, label: EdgeLabel, dec: MultiIndex, child: "DecoratedTree"):
        self.label = label
        self.dec = dec
        self.child = child
        self._key = (label.index, tuple(dec), child._key)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Edge) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Edge({self.label.name}, {tuple(self.dec)}, {self.child!r})"


_INTERN: dict[tuple, "DecoratedTree"] = {}


class DecoratedTree:
    """An immutable decorated rooted tree in canonical form.

    Construct through :func:`make_tree` (or the convenience builders
    below); the factory sorts children and interns the value.  A tree
    with no edges and decoration k is the monomial symbol X^k; the unit
    is X^0.
    """

    __slots__ = ("n", "edges", "_key", "_hash", "edge_count", "n_noise")

    def __init__(self, n: MultiIndex, edges: tuple[Edge, ...], _key: tuple):
        self.n = n
        self.edges = edges
        self._key = _key
        self._hash = hash(_key)
        self.edge_count = len(edges) + sum(e.child.edge_count for e in edges)
        self.n_noise = sum(
            (1 if e.label is O_LABEL else 0) + e.child.n_noise for e in edges
        )

    # Equality is key-based; interning makes `is` usually sufficient.
    def __eq__(self, other: object) -> bool:
        return self is other or (
            isinstance(other, DecoratedTree) and self._key == other._key
        )

    def __hash__(self) -> int:
        return self._hash

    @property
    def is_bare(self) -> bool:
        """True for monomial symbols X^k (no edges)."""
        return not self.edges

    @property
    def is_unit(self) -> bool:
        return not self.edges and self.n.is_zero

    @property
    def is_planted(self) -> bool:
        """Single edge at an undecorated root."""
        return len(self.edges) == 1 and self.n.is_zero

    @property
    def dim(self) -> int:
        return self.n.dim

    def label_count(self, label: EdgeLabel) -> int:
        return sum(
            (1 if e.label is label else 0) + e.child.label_count(label)
            for e in self.edges
        )

    def sort_key(self) -> tuple:
        """Total-order key on canonical forms (used for tie-breaks)."""
        return self._key

    def __repr__(self) -> str:
        from .grammar import format_tree  # local import to avoid a cycle

        return f"<{format_tree(self)}>"


def make_tree(n: MultiIndex, edges: Sequence[Edge]) -> DecoratedTree:
    """Canonicalize and intern a tree given its root decoration and edges."""
    sorted_edges = tuple(sorted(edges, key=lambda e: e._key))
    for e in sorted_edges:
        if e.label is not K_LABEL and not e.child.is_unit:
            # Noise-type edges end in a bare undecorated node.  A nonzero
            # *edge* decoration is tolerated here because coproducts cut
            # noise edges and put the boundary derivative on the planted
            # stump; family membership checks reject such symbols.
            raise ValueError(
                f"{e.label.name}-labeled edges must end in a bare node"
            )
        if e.dec.dim != n.dim or e.child.dim != n.dim:
            raise ValueError("mixed multiindex dimensions inside one tree")
    key = (tuple(n), tuple(e._key for e in sorted_edges))
    tree = _INTERN.get(key)
    if tree is None:
        tree = DecoratedTree(n, sorted_edges, key)
        _INTERN[key] = tree
    return tree


def bare_node(n: MultiIndex) -> DecoratedTree:
    return make_tree(n, ())


def unit_tree(dim: int) -> DecoratedTree:
    """The empty symbol 1 = X^0."""
    return make_tree(MultiIndex.zero(dim), ())


def x_power(k: MultiIndex) -> DecoratedTree:
    """The monomial symbol X^k."""
    return make_tree(k, ())


def x_basis(dim: int, j: int) -> DecoratedTree:
    """X_j as a tree, j 0-based (j=0 is time)."""
    return x_power(MultiIndex.basis(dim, j))


def canonicalize(t: DecoratedTree) -> DecoratedTree:
    """Identity on values built by the factory; kept for API symmetry."""
    return t


def tree_product(t1: DecoratedTree, t2: DecoratedTree) -> DecoratedTree:
    """Product identifying the two roots; root decorations add.

    Commutative and associative on canonical forms, with X^0 as unit.
    The result may violate the single-noise-child constraint; callers
    that care should run :func:`violates_noise_leaf_rule`.
    """
    return make_tree(t1.n + t2.n, t1.edges + t2.edges)


def tree_product_many(trees: Iterable[DecoratedTree], dim: int) -> DecoratedTree:
    out = unit_tree(dim)
    for t in trees:
        out = tree_product(out, t)
    return out


def graft(t: DecoratedTree, label: EdgeLabel, k: MultiIndex) -> DecoratedTree:
    """I_k^label(t): hang t below a fresh undecorated root.

    Noise-type labels only admit the bare undecorated child and k = 0,
    since those edges must stay decoration-free leaf edges.
    """
    if label is not K_LABEL:
        if not k.is_zero:
            raise ValueError(f"cannot decorate an {label.name}-labeled edge")
        if not t.is_unit:
            raise ValueError(f"{label.name}-labeled edges must end in a bare node")
    if k.dim != t.dim:
        raise ValueError("decoration dimension does not match the tree")
    return make_tree(MultiIndex.zero(t.dim), (Edge(label, k, t),))


def planted_parts(t: DecoratedTree) -> list[DecoratedTree]:
    """The planted factors I_{e.dec}^{e.label}(e.child) of the root."""
    return [make_tree(MultiIndex.zero(t.dim), (e,)) for e in t.edges]


EdgePath = tuple[int, ...]


def noise_edges(t: DecoratedTree) -> tuple[EdgePath, ...]:
    """Paths (child-index sequences) of all O-labeled edges, sorted."""
    found: list[EdgePath] = []

    def walk(node: DecoratedTree, prefix: EdgePath) -> None:
        for i, e in enumerate(node.edges):
            if e.label is O_LABEL:
                found.append(prefix + (i,))
            walk(e.child, prefix + (i,))

    walk(t, ())
    return tuple(found)


def shift_edges(
    t: DecoratedTree,
    V: Iterable[EdgePath],
    W: Iterable[EdgePath] = (),
) -> DecoratedTree:
    """D_{V,W}: relabel noise edges, V as H and W as HB.

    V and W are disjoint subsets of ``noise_edges(t)`` given as paths in
    the canonical form.  Shape and decorations are untouched; the result
    is re-canonicalized (so paths into the result may differ).
    """
    vset, wset = set(V), set(W)
    if vset & wset:
        raise ValueError("V and W must be disjoint")
    valid = set(noise_edges(t))
    for path in vset | wset:
        if path not in valid:
            raise ValueError(f"{path} is not an O-labeled edge of the tree")

    def rebuild(node: DecoratedTree, prefix: EdgePath) -> DecoratedTree:
        new_edges = []
        for i, e in enumerate(node.edges):
            path = prefix + (i,)
            label = e.label
            if path in vset:
                label = H_LABEL
            elif path in wset:
                label = HB_LABEL
            new_edges.append(Edge(label, e.dec, rebuild(e.child, path)))
        return make_tree(node.n, new_edges)

    return rebuild(t, ())


def violates_noise_leaf_rule(t: DecoratedTree) -> bool:
    """True if some node has two or more noise-type children."""
    if sum(1 for e in t.edges if e.label is not K_LABEL) > 1:
        return True
    return any(violates_noise_leaf_rule(e.child) for e in t.edges)


def has_decorated_noise_edge(t: DecoratedTree) -> bool:
    """True if an O/H/HB edge carries a nonzero derivative decoration.

    Family trees never do; coproduct right factors may (the boundary
    derivative of a cut noise edge lands on the planted stump).
    """
    for e in t.edges:
        if e.label is not K_LABEL and not e.dec.is_zero:
            return True
        if has_decorated_noise_edge(e.child):
            return True
    return False


def contains_kernel_leaf(t: DecoratedTree) -> bool:
    """True if some leaf node hangs below a K-labeled edge.

    Such trees generate the ideal the symbol space is quotiented by;
    coproducts drop any tensor factor containing one.  A bare root X^m
    is not a kernel leaf.
    """
    for e in t.edges:
        if e.label is K_LABEL and e.child.is_bare:
            return True
        if contains_kernel_leaf(e.child):
            return True
    return False


class FormalSum:
    """A finite linear combination of canonical trees.

    Coefficients are exact rationals in symbolic work but may be floats
    once estimated renormalization constants enter.  Zero-coefficient
    terms are dropped on construction.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[DecoratedTree, Scalar] | None = None):
        clean: dict[DecoratedTree, Scalar] = {}
        if terms:
            for tree, c in terms.items():
                if c != 0:
                    clean[tree] = c
        self.terms = clean

    @classmethod
    def single(cls, t: DecoratedTree, c: Scalar = Fraction(1)) -> "FormalSum":
        return cls({t: c})

    @classmethod
    def zero(cls) -> "FormalSum":
        return cls()

    def __iter__(self) -> Iterator[tuple[DecoratedTree, Scalar]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: "FormalSum") -> "FormalSum":
        out = dict(self.terms)
        for tree, c in other.terms.items():
            out[tree] = out.get(tree, 0) + c
        return FormalSum(out)

    def __sub__(self, other: "FormalSum") -> "FormalSum":
        return self + other.scale(-1)

    def scale(self, c: Scalar) -> "FormalSum":
        if c == 0:
            return FormalSum()
        return FormalSum({t: c * v for t, v in self.terms.items()})

    def coefficient(self, t: DecoratedTree) -> Scalar:
        return self.terms.get(t, 0)

    def map_trees(self, f) -> "FormalSum":
        """Linear extension of a tree map f: tree -> FormalSum."""
        out: dict[DecoratedTree, Scalar] = {}
        for tree, c in self.terms.items():
            for t2, c2 in f(tree):
                out[t2] = out.get(t2, 0) + c * c2
        return FormalSum(out)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FormalSum) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "FormalSum(0)"
        bits = [f"{c}*{t!r}" for t, c in sorted(self.terms.items(), key=lambda kv: kv[0].sort_key())]
        return "FormalSum(" + " + ".join(bits) + ")"
