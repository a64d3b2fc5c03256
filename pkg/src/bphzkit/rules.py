"""Tree family generation from subcritical rules.

A rule lists which child multisets a node may carry: a production
``(a, b)`` allows a node with ``a`` noise edges and ``b`` kernel edges
below it (presets keep ``a <= 1`` so noise edges stay unique per node).
Generation enumerates every conforming tree of degree below the
truncation C0, exactly, by recursive budget propagation; a value
iteration on the minimal branch degree doubles as the subcriticality
guard.  On top of the base family B the module derives the relabeled
families (noise edges redirected to shift types), the negative-degree
subset driving renormalization, the processing order, and the positive
generator sets of the plus algebra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .degrees import INF, PValue, StructureParams, degree, inv_p
from .trees import (
    DecoratedTree,
    Edge,
    HB_LABEL,
    K_LABEL,
    MultiIndex,
    O_LABEL,
    bare_node,
    graft,
    make_tree,
    multiindices_of_size_at_most,
    noise_edges,
    shift_edges,
    unit_tree,
    violates_noise_leaf_rule,
)

__all__ = [
    "Rule",
    "TreeFamily",
    "PlusGenerators",
    "SubcriticalityError",
    "generate_B",
    "derived_families",
    "bphz_compare",
    "bphz_key",
    "plus_generators",
    "check_variance_condition",
    "check_eps_admissible",
    "PRESETS",
    "preset",
]

MAX_GENERATION_DEPTH = 12


class SubcriticalityError(RuntimeError):
    """Raised when iterating the rule fails to push degrees up."""


@dataclass(frozen=True)
class Rule:
    """A production table: allowed (noise count, kernel count) pairs per node.

    poly_budget bounds |n(v)|_s of internal node decorations (the pure
    monomial symbols X^k are always admitted separately); deriv_budget
    bounds |e|_s on kernel edges.  The table must be subset-closed
    (complete in the usual sense) and keep noise counts at most 1.
    """

    name: str
    d: int
    productions: frozenset[tuple[int, int]]
    poly_budget: int = 0
    deriv_budget: int = 0

    def __post_init__(self):
        prods = frozenset((int(a), int(b)) for a, b in self.productions)
        object.__setattr__(self, "productions", prods)
        if (0, 0) not in prods:
            raise ValueError("the empty production () must be allowed")
        for a, b in prods:
            if a > 1:
                raise ValueError("productions with two noise children are not allowed")
            for a2, b2 in itertools.product(range(a + 1), range(b + 1)):
                if (a2, b2) not in prods:
                    raise ValueError(
                        f"production table not subset-closed: missing ({a2},{b2})"
                    )

    @property
    def dim(self) -> int:
        return 1 + self.d


def _min_branch_degree(rule: Rule, params: StructureParams) -> Fraction:
    """Fixpoint of the minimal degree over edge-bearing conforming trees.

    Diverges exactly when composing the rule can push degrees down
    forever; the iteration cap turns that into a SubcriticalityError.
    """
    r0, beta0 = params.r0, params.beta0
    db = rule.deriv_budget
    current = Fraction(0)
    for _ in range(MAX_GENERATION_DEPTH):
        best = None
        for a, b in rule.productions:
            if a + b == 0:
                continue
            val = a * r0 + b * (beta0 + current - db)
            if best is None or val < best:
                best = val
        if best is None:
            raise SubcriticalityError("rule has no edge-bearing productions")
        nxt = min(current, best)
        if nxt == current:
            return current
        current = nxt
    raise SubcriticalityError(
        f"minimal tree degree still decreasing after {MAX_GENERATION_DEPTH} "
        f"rule applications (reached {current}); rule is not subcritical"
    )


def generate_B(rule: Rule, params: StructureParams) -> "TreeFamily":
    """All conforming trees of degree < C0, plus the monomials X^k.

    Deterministic: output sorted by the processing order `bphz_key`.
    """
    if rule.d != params.d:
        raise ValueError("rule and params disagree on the dimension")
    dim = rule.dim
    eps0, pinf = Fraction(0), INF
    d_min = _min_branch_degree(rule, params)
    beta0 = params.beta0
    db = rule.deriv_budget
    min_contrib = beta0 + d_min - db
    decs = multiindices_of_size_at_most(dim, rule.deriv_budget)
    polys = multiindices_of_size_at_most(dim, rule.poly_budget)
    noise_child = bare_node(MultiIndex.zero(dim))

    memo: dict[Fraction, tuple[DecoratedTree, ...]] = {}

    def edged_below(budget: Fraction, depth: int) -> tuple[DecoratedTree, ...]:
        if budget <= d_min:
            return ()
        got = memo.get(budget)
        if got is not None:
            return got
        if depth > MAX_GENERATION_DEPTH:
            raise SubcriticalityError(
                "tree enumeration exceeded the depth guard; rule is not subcritical"
            )
        out: set[DecoratedTree] = set()
        for a, b in rule.productions:
            if a + b == 0:
                continue
            for n_dec in polys:
                base = Fraction(n_dec.sdeg) + a * params.r0
                remaining = budget - base
                if b == 0:
                    if remaining > 0:
                        edges = tuple(
                            Edge(O_LABEL, MultiIndex.zero(dim), noise_child)
                            for _ in range(a)
                        )
                        out.add(make_tree(n_dec, edges))
                    continue
                # largest degree any single branch may have
                cap = remaining - (b - 1) * min(min_contrib, Fraction(0))
                branch_cap = cap - beta0 + db
                pool = edged_below(branch_cap, depth + 1)
                options = [
                    (k, sub, beta0 - k.sdeg + degree(sub, eps0, pinf, params))
                    for k, sub in itertools.product(decs, pool)
                ]
                for combo in itertools.combinations_with_replacement(
                    range(len(options)), b
                ):
                    total = sum((options[i][2] for i in combo), Fraction(0))
                    if total >= remaining:
                        continue
                    edges = [Edge(K_LABEL, options[i][0], options[i][1]) for i in combo]
                    edges += [
                        Edge(O_LABEL, MultiIndex.zero(dim), noise_child)
                        for _ in range(a)
                    ]
                    out.add(make_tree(n_dec, edges))
        result = tuple(sorted(out, key=lambda t: t.sort_key()))
        memo[budget] = result
        return result

    poly_cap = max(int(params.C0) + 1, 0)
    trees: list[DecoratedTree] = [
        make_tree(k, ())
        for k in multiindices_of_size_at_most(dim, poly_cap)
        if Fraction(k.sdeg) < params.C0
    ]
    trees += list(edged_below(params.C0, 0))
    for t in trees:
        if violates_noise_leaf_rule(t):
            raise AssertionError(f"generated tree violates the noise leaf rule: {t!r}")
    trees.sort(key=lambda t: bphz_key(t, params))
    return TreeFamily(rule=rule, params=params, trees=tuple(trees))


def bphz_key(t: DecoratedTree, params: StructureParams):
    """Processing order: (noise count, edge count, degree at (0, inf)),
    ties broken by the canonical key."""
    return (
        t.n_noise,
        t.edge_count,
        degree(t, Fraction(0), INF, params),
        t.sort_key(),
    )


def bphz_compare(t1: DecoratedTree, t2: DecoratedTree, params: StructureParams) -> int:
    k1, k2 = bphz_key(t1, params), bphz_key(t2, params)
    return -1 if k1 < k2 else (0 if k1 == k2 else 1)


@dataclass(frozen=True)
class PlusGenerators:
    """Positive-degree generator sets of the plus algebra at fixed (eps, p)."""

    Vplus: tuple[DecoratedTree, ...]
    Uplus: tuple[DecoratedTree, ...]
    Wplus: tuple[DecoratedTree, ...]


@dataclass
class TreeFamily:
    """The base family B with its derived relabelings and generator sets."""

    rule: Rule
    params: StructureParams
    trees: tuple[DecoratedTree, ...]
    _derived: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.rule.dim

    @property
    def B(self) -> tuple[DecoratedTree, ...]:
        return self.trees

    @property
    def noise_symbol(self) -> DecoratedTree:
        return graft(unit_tree(self.dim), O_LABEL, MultiIndex.zero(self.dim))

    @property
    def Bdot(self) -> tuple[DecoratedTree, ...]:
        self._ensure_derived()
        return self._derived["Bdot"]

    @property
    def Bdotbar(self) -> tuple[DecoratedTree, ...]:
        self._ensure_derived()
        return self._derived["Bdotbar"]

    @property
    def Btilde(self) -> tuple[DecoratedTree, ...]:
        self._ensure_derived()
        return self._derived["Btilde"]

    @property
    def B_minus(self) -> tuple[DecoratedTree, ...]:
        self._ensure_derived()
        return self._derived["B_minus"]

    @property
    def m_B(self) -> int:
        """Largest noise count over B."""
        return max(t.n_noise for t in self.trees)

    def _ensure_derived(self) -> None:
        if self._derived:
            return
        bdot: set[DecoratedTree] = set()
        bdotbar: set[DecoratedTree] = set()
        for t in self.trees:
            paths = noise_edges(t)
            for r in range(1, len(paths) + 1):
                for V in itertools.combinations(paths, r):
                    bdot.add(shift_edges(t, V))
            for r in range(len(paths)):
                for V in itertools.combinations(paths, r):
                    rest = [p for p in paths if p not in V]
                    for w in rest:
                        bdotbar.add(shift_edges(t, V, (w,)))
        key = lambda t: bphz_key(t, self.params)
        bdot_t = tuple(sorted(bdot, key=key))
        bdotbar_t = tuple(sorted(bdotbar, key=key))
        btilde = tuple(sorted(set(self.trees) | bdot | bdotbar, key=key))
        b_minus = tuple(
            t
            for t in self.trees
            if degree(t, Fraction(0), INF, self.params) < 0
            and t != self.noise_symbol
            and not (t.is_planted and t.edges[0].label is K_LABEL)
        )
        self._derived.update(
            Bdot=bdot_t, Bdotbar=bdotbar_t, Btilde=btilde, B_minus=b_minus
        )


def derived_families(family: TreeFamily) -> TreeFamily:
    """Materialize the relabeled families on the given family and return it."""
    family._ensure_derived()
    return family


def _planted_generators(
    source: Iterable[DecoratedTree],
    eps: Fraction,
    p: PValue,
    params: StructureParams,
) -> list[DecoratedTree]:
    out = []
    for t in source:
        if t.is_bare:
            continue
        r = degree(t, eps, p, params)
        bound = r + params.beta0
        if bound <= 0:
            continue
        for k in multiindices_of_size_at_most(1 + params.d, int(bound) + 1):
            if Fraction(k.sdeg) < bound:
                out.append(graft(t, K_LABEL, k))
    return out


def plus_generators(
    family: TreeFamily, eps: Fraction, p: PValue, params: StructureParams | None = None
) -> PlusGenerators:
    """The generator triples (V+, U+, W+) at (eps, p)."""
    params = params or family.params
    eps = Fraction(eps)
    dim = 1 + params.d
    xs = [make_tree(MultiIndex.basis(dim, j), ()) for j in range(dim)]

    vplus = xs + _planted_generators(family.B, eps, p, params)
    uplus = xs + _planted_generators(
        list(family.B) + list(family.Bdot), eps, p, params
    )
    wplus = xs + _planted_generators(family.Btilde, eps, p, params)
    hb_degree = params.r0 - eps + Fraction(2 + params.d) * inv_p(p)
    if hb_degree > 0:
        bare = unit_tree(dim)
        for k in multiindices_of_size_at_most(dim, int(hb_degree) + 1):
            if Fraction(k.sdeg) < hb_degree:
                wplus.append(
                    make_tree(MultiIndex.zero(dim), (Edge(HB_LABEL, k, bare),))
                )
    key = lambda t: t.sort_key()
    return PlusGenerators(
        Vplus=tuple(sorted(set(vplus), key=key)),
        Uplus=tuple(sorted(set(uplus), key=key)),
        Wplus=tuple(sorted(set(wplus), key=key)),
    )


@dataclass(frozen=True)
class VarianceReport:
    ok: bool
    threshold: Fraction
    violators: tuple[tuple[DecoratedTree, Fraction], ...]


def check_variance_condition(
    family: TreeFamily, params: StructureParams | None = None
) -> VarianceReport:
    """Verify r_{0,inf}(tau) > -(2+d)/2 for all tau in B except the noise."""
    params = params or family.params
    threshold = -Fraction(2 + params.d, 2)
    bad = []
    for t in family.B:
        if t == family.noise_symbol:
            continue
        r = degree(t, Fraction(0), INF, params)
        if not r > threshold:
            bad.append((t, r))
    return VarianceReport(ok=not bad, threshold=threshold, violators=tuple(bad))


@dataclass(frozen=True)
class EpsAdmissibleReport:
    ok: bool
    witnesses: tuple[tuple[str, DecoratedTree, Fraction], ...]


def check_eps_admissible(
    eps: Fraction, p: PValue, family: TreeFamily
) -> EpsAdmissibleReport:
    """Effective non-resonance at (eps, p).

    Fails when some W+ generator degree is exactly 0, or some
    noise-carrying family tree has degree exactly 0 or exactly
    -(2+d)/2.  Pure monomials are exempt (X^0 always has degree 0).
    """
    eps = Fraction(eps)
    params = family.params
    gens = plus_generators(family, eps, p, params)
    witnesses: list[tuple[str, DecoratedTree, Fraction]] = []
    for mu in gens.Wplus:
        if mu.is_bare:
            continue
        r = degree(mu, eps, p, params)
        if r == 0:
            witnesses.append(("generator degree 0", mu, r))
    half = -Fraction(2 + params.d, 2)
    for t in family.Btilde:
        if t.is_bare:
            continue
        r = degree(t, eps, p, params)
        if r == 0:
            witnesses.append(("tree degree 0", t, r))
        elif r == half:
            witnesses.append(("tree degree -(2+d)/2", t, r))
    return EpsAdmissibleReport(ok=not witnesses, witnesses=tuple(witnesses))


def _phi4_productions() -> frozenset[tuple[int, int]]:
    return frozenset({(0, 0), (1, 0), (0, 1), (0, 2), (0, 3)})


def _gpam_productions() -> frozenset[tuple[int, int]]:
    return frozenset({(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)})


PRESETS: dict[str, tuple[Rule, StructureParams]] = {
    "phi4_3": (
        Rule(name="phi4_3", d=3, productions=_phi4_productions()),
        StructureParams(
            d=3,
            s0=Fraction(0),
            r0=Fraction(-251, 100),
            beta0=Fraction(199, 100),
            C0=Fraction(2),
        ),
    ),
    "gpam_2": (
        Rule(name="gpam_2", d=2, productions=_gpam_productions()),
        StructureParams(
            d=2,
            s0=Fraction(-3, 2),
            r0=Fraction(-101, 100),
            beta0=Fraction(199, 100),
            C0=Fraction(3, 2),
        ),
    ),
    "phi4_4-nu": (
        Rule(name="phi4_4-nu", d=4, productions=_phi4_productions()),
        StructureParams(
            d=4,
            s0=Fraction(-3),
            r0=Fraction(-11, 4),
            beta0=Fraction(199, 100),
            C0=Fraction(1, 4),
        ),
    ),
}


def preset(name: str) -> tuple[Rule, StructureParams]:
    try:
        rule, params = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    return rule, params
