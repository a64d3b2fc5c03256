"""Grid interpretation of decorated trees: models, characters, norms.

A model couples a multiplicative interpretation of trees (noise symbols
go to a supplied field, shift symbols to a second field, monomials to
plain cell coordinates, kernel edges to the integrated-kernel operator)
with a field of characters on the positive-degree algebra.  The
characters are realized as per-generator grid fields, so recentering a
tree at every base point at once is a handful of pointwise products of
precomputed fields rather than a per-point recursion.

Renormalization enters symbolically: when a counterterm table is
supplied, interpretation first expands the tree through the composed
extraction map and then interprets each term naively.

Conventions that matter for exactness:

* Monomial symbols are interpreted with plain (unwrapped) cell
  coordinates, so the recentering binomial identity and the two
  evaluation paths for the shifted character hold to rounding error at
  concrete pairs of grid points.  The price is that coordinate fields
  are not periodic; offset character norms therefore mask out the rows
  that wrap around the torus edge, and the masked row set is part of
  the reported evaluation skeleton.
* Arrays stored in the memo tables are shared and must be treated as
  read-only; accumulators are always freshly allocated.
* Exact rational coefficients coming from the symbolic layer are cast
  to float at the boundary where they meet arrays (a Fraction times an
  ndarray silently produces an object array).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .degrees import INF, PValue, StructureParams, degree_fn, integrability
from .grammar import format_tree
from .grids import Grid, GridField
from .hopf import Character, antipode_plus, coaction, coproduct_plus, renorm_M
from .kernels import T_LADDER_LEVELS, apply_Q, apply_calK, spectral_derivative, weighted_lp_norm
from .rules import TreeFamily, plus_generators
from .trees import (
    DecoratedTree,
    Edge,
    FormalSum,
    H_LABEL,
    HB_LABEL,
    K_LABEL,
    MultiIndex,
    O_LABEL,
    contains_kernel_leaf,
    graft,
    make_tree,
    multiindices_of_size_at_most,
    planted_parts,
    x_basis,
)

__all__ = [
    "Model",
    "NormRow",
    "ModelNormReport",
    "naive_interpret",
    "renorm_interpret",
    "f_char",
    "g_char",
    "g_inverse_char",
    "recentered",
    "g_yx",
    "model_norms",
    "model_distance",
    "default_offsets",
    "hom_norm_sets",
    "recentered_qt_profile",
]

Index = tuple[int, ...]
Offset = tuple[int, ...]


class Model:
    """A noise/shift pair interpreted over one grid.

    Parameters
    ----------
    noise:
        Field standing in for the driving noise symbol.
    shift:
        Field standing in for both shift symbols; defaults to zero.
    counterterms:
        Optional tree -> value table of renormalization constants.
        When present, interpretation routes through the symbolic
        extraction map before touching the grid.
    params:
        Structure parameters.  Only needed for the degree-gated maps
        (characters, recentering, norms); plain interpretation works
        without them.
    eps, p:
        Degree-shift and integrability knobs; default to the values
        stored on ``params``.
    """

    def __init__(
        self,
        noise: GridField,
        shift: GridField | None = None,
        counterterms: Mapping[DecoratedTree, float] | None = None,
        params: StructureParams | None = None,
        eps: Fraction | None = None,
        p: PValue | None = None,
        name: str = "",
    ):
        self.noise = noise
        self.grid = noise.grid
        self.shift = shift if shift is not None else self.grid.zero_field()
        if self.shift.grid is not self.grid:
            raise ValueError("noise and shift live on different grids")
        self.counterterms = dict(counterterms) if counterterms else None
        self.params = params
        self.name = name
        if params is not None:
            self.eps = Fraction(params.eps) if eps is None else Fraction(eps)
            self.p = params.p if p is None else p
            self.degree = degree_fn(self.eps, self.p, params)
        elif eps is not None or p is not None:
            raise ValueError("eps/p overrides make no sense without params")
        self._axes = self.grid.coords()
        self._naive: dict[DecoratedTree, np.ndarray] = {}
        self._interp: dict[DecoratedTree, np.ndarray] = {}
        self._edge_vals: dict[Edge, np.ndarray] = {}
        self._f: dict[DecoratedTree, np.ndarray] = {}
        self._co: dict[DecoratedTree, tuple] = {}
        self._cop: dict[DecoratedTree, tuple] = {}
        self._qt: dict[tuple, np.ndarray] = {}
        self._goff: dict[tuple, np.ndarray] = {}
        self._ginv_forests: dict[DecoratedTree, np.ndarray | float] = {}
        self._g_forests: dict[DecoratedTree, np.ndarray | float] = {}
        self._zeros = np.zeros(self.grid.shape)
        self._zeros.setflags(write=False)
        dim = self.grid.dim
        self._ginv_char = Character(dim, rule=self._ginv_rule, name="ginv")
        self._g_char = Character(dim, rule=self._g_rule, name="g")
        for j in range(dim):
            xs = self._axes[j]
            self._ginv_char.values[x_basis(dim, j)] = -xs
            self._g_char.values[x_basis(dim, j)] = xs

    # -- plain interpretation -------------------------------------------

    def naive(self, t: DecoratedTree) -> GridField:
        """Interpretation without counterterms."""
        self._check_tree(t)
        return GridField(self.grid, self._naive_values(t), label=format_tree(t))

    def interpret(self, t: DecoratedTree) -> GridField:
        """Interpretation with the counterterm table folded in."""
        self._check_tree(t)
        return GridField(self.grid, self._interp_values(t), label=format_tree(t))

    def interpret_sum(self, s: FormalSum) -> GridField:
        out = np.zeros(self.grid.shape)
        for t, c in s:
            self._check_tree(t)
            out += float(c) * self._interp_values(t)
        return GridField(self.grid, out)

    def _check_tree(self, t: DecoratedTree) -> None:
        if t.dim != self.grid.dim:
            raise ValueError(
                f"tree dimension {t.dim} does not match grid dimension {self.grid.dim}"
            )
        if contains_kernel_leaf(t):
            raise ValueError(f"{t!r} has a kernel edge with nothing below it")

    def _monomial(self, k: MultiIndex):
        out = 1.0
        for i, m in enumerate(k):
            if m:
                out = out * self._axes[i] ** m
        return out

    def _full(self, v) -> np.ndarray:
        return np.broadcast_to(np.asarray(v, dtype=np.float64), self.grid.shape)

    def _naive_values(self, t: DecoratedTree) -> np.ndarray:
        got = self._naive.get(t)
        if got is None:
            vals = self._full(self._monomial(t.n))
            for e in t.edges:
                vals = vals * self._edge_values(e)
            got = self._naive[t] = self._full(vals)
        return got

    def _edge_values(self, e: Edge) -> np.ndarray:
        got = self._edge_vals.get(e)
        if got is None:
            if e.label is K_LABEL:
                inner = GridField(self.grid, self._naive_values(e.child))
                got = apply_calK(e.dec, inner).values
            else:
                base = self.noise if e.label is O_LABEL else self.shift
                got = base.values if e.dec.is_zero else spectral_derivative(e.dec, base).values
            self._edge_vals[e] = got
        return got

    def _interp_values(self, t: DecoratedTree) -> np.ndarray:
        if self.counterterms is None:
            return self._naive_values(t)
        got = self._interp.get(t)
        if got is None:
            out = np.zeros(self.grid.shape)
            for s, c in renorm_M(self.counterterms, t):
                out += float(c) * self._naive_values(s)
            got = self._interp[t] = out
        return got

    # -- degree-gated machinery -----------------------------------------

    @property
    def _p(self) -> StructureParams:
        if self.params is None:
            raise ValueError("this operation needs structure parameters")
        return self.params

    def _coterms(self, t: DecoratedTree) -> tuple:
        """Coaction of t as (float coeff, left tree, right forest) rows."""
        got = self._co.get(t)
        if got is None:
            got = self._co[t] = tuple(
                (float(c), left, right)
                for (left, right), c in coaction(t, self.eps, self.p, self._p)
            )
        return got

    def _copterms(self, mu: DecoratedTree) -> tuple:
        got = self._cop.get(mu)
        if got is None:
            got = self._cop[mu] = tuple(
                (float(c), left, right)
                for (left, right), c in coproduct_plus(mu, self.eps, self.p, self._p)
            )
        return got

    def f_values(self, mu: DecoratedTree) -> np.ndarray:
        """The planted-symbol character as a field over base points.

        Zero off kernel and relevant-shift plantings and whenever the
        degree is not positive, matching the zero extension used by the
        recursive character constructions.
        """
        got = self._f.get(mu)
        if got is not None:
            return got
        if not mu.is_planted:
            raise ValueError(f"{mu!r} is not a planted symbol")
        e = mu.edges[0]
        if self.degree(mu) <= 0:
            out: np.ndarray = self._zeros
        elif e.label is HB_LABEL:
            out = (
                self.shift.values
                if e.dec.is_zero
                else spectral_derivative(e.dec, self.shift).values
            )
        elif e.label is K_LABEL:
            acc = np.zeros(self.grid.shape)
            for c, left, right in self._coterms(e.child):
                field = apply_calK(e.dec, GridField(self.grid, self._interp_values(left)))
                acc += c * field.values * self.ginv_values(right)
            out = acc
        else:
            out = self._zeros
        self._f[mu] = out
        return out

    def _ginv_rule(self, g: DecoratedTree) -> np.ndarray:
        r = self.degree(g)
        if r <= 0:
            return self._zeros
        e = g.edges[0]
        out = np.zeros(self.grid.shape)
        # Taylor sum truncated where the degree of the re-decorated
        # planting stops being positive.
        for l in multiindices_of_size_at_most(self.grid.dim, math.ceil(r - 1)):
            shifted = make_tree(
                MultiIndex.zero(self.grid.dim), (Edge(e.label, e.dec + l, e.child),)
            )
            fv = self.f_values(shifted)
            if fv is self._zeros:
                continue
            coeff = -((-1.0) ** sum(l)) / float(l.factorial())
            out += coeff * self._monomial(l) * fv
        return out

    def _g_rule(self, g: DecoratedTree) -> np.ndarray:
        if self.degree(g) <= 0:
            return self._zeros
        out = np.zeros(self.grid.shape)
        for forest, c in antipode_plus(g, self.eps, self.p, self._p):
            out += float(c) * self._full(self._ginv_char(forest))
        return out

    def ginv_values(self, forest: DecoratedTree) -> np.ndarray:
        got = self._ginv_forests.get(forest)
        if got is None:
            got = self._ginv_forests[forest] = self._full(self._ginv_char(forest))
        return got

    def g_values(self, forest: DecoratedTree) -> np.ndarray:
        got = self._g_forests.get(forest)
        if got is None:
            got = self._g_forests[forest] = self._full(self._g_char(forest))
        return got

    # -- recentering and the shifted character ----------------------------

    def recentered(self, x_index: Index, t: DecoratedTree) -> GridField:
        """The interpretation recentered at one grid point, as a field."""
        self._check_index(x_index)
        out = np.zeros(self.grid.shape)
        for c, left, right in self._coterms(t):
            out += c * self._interp_values(left) * self._value_at(
                self.ginv_values(right), x_index
            )
        return GridField(self.grid, out, label=f"{format_tree(t)}@{x_index}")

    def pair_char(self, y_index: Index, x_index: Index, mu: DecoratedTree) -> float:
        """Character of the recentering change between two grid points."""
        self._check_index(y_index)
        self._check_index(x_index)
        total = 0.0
        for c, left, right in self._copterms(mu):
            total += (
                c
                * self._forest_at(self._g_char, left, y_index)
                * self._forest_at(self._ginv_char, right, x_index)
            )
        return total

    def pair_char_recursive(self, y_index: Index, x_index: Index, mu: DecoratedTree) -> float:
        """Same value as :meth:`pair_char`, by the kernel-planting recursion.

        Kernel plantings are reduced through the coaction of their
        child plus a Taylor remainder at the base point; every other
        factor falls back to the direct pairing.  Agreement of the two
        paths is a sharp consistency check on the whole character
        stack.
        """
        self._check_index(y_index)
        self._check_index(x_index)
        dy = [
            float(self.grid.axis_coords(i)[y_index[i]] - self.grid.axis_coords(i)[x_index[i]])
            for i in range(self.grid.dim)
        ]
        total = 1.0
        for i, m in enumerate(mu.n):
            total *= dy[i] ** m
        for part in planted_parts(mu):
            e = part.edges[0]
            r = self.degree(part)
            if r <= 0:
                return 0.0
            if e.label is not K_LABEL:
                total *= self.pair_char(y_index, x_index, part)
                continue
            head = 0.0
            for c, left, right in self._coterms(e.child):
                if left.is_bare:
                    # Kernel plantings of pure monomials are null in the
                    # plus algebra, so these cut terms contribute nothing.
                    continue
                fv = self.f_values(graft(left, K_LABEL, e.dec))
                if fv is self._zeros:
                    continue
                head += c * self._value_at(fv, y_index) * self.pair_char_recursive(
                    y_index, x_index, right
                )
            tail = 0.0
            for l in multiindices_of_size_at_most(self.grid.dim, math.ceil(r - 1)):
                shifted = make_tree(
                    MultiIndex.zero(self.grid.dim), (Edge(K_LABEL, e.dec + l, e.child),)
                )
                fv = self.f_values(shifted)
                if fv is self._zeros:
                    continue
                mono = 1.0
                for i, li in enumerate(l):
                    mono *= dy[i] ** li
                tail += mono / float(l.factorial()) * self._value_at(fv, x_index)
            total *= head - tail
        return total

    def _check_index(self, idx: Index) -> None:
        if len(idx) != self.grid.dim:
            raise ValueError(f"index {idx} does not match grid dimension {self.grid.dim}")

    def _value_at(self, v, idx: Index) -> float:
        return float(self._full(v)[idx])

    def _forest_at(self, char: Character, forest: DecoratedTree, idx: Index) -> float:
        out = 1.0
        for j, m in enumerate(forest.n):
            if m:
                out *= self._value_at(char.gen_value(x_basis(self.grid.dim, j)), idx) ** m
        for part in planted_parts(forest):
            out *= self._value_at(char.gen_value(part), idx)
        return out

    # -- norm building blocks ---------------------------------------------

    def _qt_diag(self, t: DecoratedTree, time: float, m: int) -> np.ndarray:
        """x -> (smoothed recentered interpretation at base x)(x).

        The smoothing operator only ever hits left coaction factors, so
        the whole diagonal is a linear combination of full-grid
        pointwise products; nothing is evaluated per base point.
        """
        out = np.zeros(self.grid.shape)
        for c, left, right in self._coterms(t):
            key = (left, time, m)
            smoothed = self._qt.get(key)
            if smoothed is None:
                field = GridField(self.grid, self._interp_values(left))
                smoothed = self._qt[key] = apply_Q(time, field, m).values
            out += c * smoothed * self.ginv_values(right)
        return out

    def _g_offset(self, mu: DecoratedTree, off: Offset) -> np.ndarray:
        """x -> pair_char(x + off, x, mu) via rolled character fields."""
        key = (mu, off)
        got = self._goff.get(key)
        if got is None:
            shifts = tuple(-o for o in off)
            axes = tuple(range(self.grid.dim))
            out = np.zeros(self.grid.shape)
            for c, left, right in self._copterms(mu):
                rolled = np.roll(self.g_values(left), shifts, axis=axes)
                out += c * rolled * self.ginv_values(right)
            got = self._goff[key] = out
        return got


# ---------------------------------------------------------------------------
# spec'd entry points


def naive_interpret(
    noise: GridField, shift: GridField | None, t: DecoratedTree
) -> GridField:
    """One-shot interpretation without counterterms.

    Builds a throwaway model; reuse a :class:`Model` when interpreting
    many trees against the same inputs.
    """
    return Model(noise, shift).naive(t)


def renorm_interpret(
    noise: GridField,
    shift: GridField | None,
    counterterms: Mapping[DecoratedTree, float],
    t: DecoratedTree,
) -> GridField:
    return Model(noise, shift, counterterms=counterterms).interpret(t)


def f_char(model: Model, mu: DecoratedTree) -> GridField:
    return GridField(model.grid, np.array(model.f_values(mu)), label=format_tree(mu))


def g_char(model: Model, mu: DecoratedTree) -> GridField:
    return GridField(model.grid, np.array(model.g_values(mu)), label=format_tree(mu))


def g_inverse_char(model: Model, mu: DecoratedTree) -> GridField:
    return GridField(model.grid, np.array(model.ginv_values(mu)), label=format_tree(mu))


def recentered(model: Model, x_index: Index, t: DecoratedTree) -> GridField:
    return model.recentered(x_index, t)


def g_yx(
    model: Model,
    y_index: Index,
    x_index: Index,
    mu: DecoratedTree,
    method: str = "direct",
) -> float:
    """The shifted character at a concrete pair of grid points.

    ``method`` picks the evaluation path: ``direct`` pairs the two
    character fields through the positive coproduct, ``recursive`` runs
    the kernel-planting reduction.
    """
    if method == "direct":
        return model.pair_char(y_index, x_index, mu)
    if method == "recursive":
        return model.pair_char_recursive(y_index, x_index, mu)
    raise ValueError(f"unknown evaluation method {method!r}")


# ---------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormRow:
    kind: str  # "interp" for tree rows, "char" for generator rows
    symbol: str
    degree: Fraction
    lp: float
    value: float


@dataclass
class ModelNormReport:
    """Per-symbol seminorm values plus their aggregates.

    ``skeleton`` records every discretization choice the continuum
    suprema were replaced with (time ladder, offset lattice, weight
    exponent, smoothing order), so two reports are comparable exactly
    when their skeletons agree.
    """

    mode: str
    rows: list[NormRow]
    interp_part: float
    char_part: float
    total: float
    skeleton: dict
    skipped: tuple[str, ...] = ()

    def to_lines(self) -> list[str]:
        out = [f"model norms [{self.mode}]"]
        for key in sorted(self.skeleton):
            out.append(f"# {key}: {self.skeleton[key]}")
        for row in self.rows:
            lp = "inf" if row.lp == math.inf else f"{row.lp:g}"
            out.append(
                f"{row.kind}\t{row.symbol}\tr={row.degree}\tLp={lp}\t{row.value:.12e}"
            )
        for sym in self.skipped:
            out.append(f"skipped\t{sym}\t(no noise edges in homogeneous mode)")
        out.append(
            f"aggregate\tinterp={self.interp_part:.12e}"
            f"\tchar={self.char_part:.12e}\ttotal={self.total:.12e}"
        )
        return out

    def __str__(self) -> str:
        return "\n".join(self.to_lines())


def default_offsets(grid: Grid, max_per_axis: int = 3) -> tuple[Offset, ...]:
    """Dyadic axis-aligned index offsets, clipped to a quarter period."""
    offs: list[Offset] = []
    for axis in range(grid.dim):
        step, used = 1, 0
        while step <= max(1, grid.shape[axis] // 4) and used < max_per_axis:
            for sign in (1, -1):
                off = [0] * grid.dim
                off[axis] = sign * step
                offs.append(tuple(off))
            step *= 2
            used += 1
    return tuple(offs)


def default_time_ladder(levels: int = T_LADDER_LEVELS) -> tuple[float, ...]:
    return tuple(2.0 ** (-j) for j in range(levels + 1))


def hom_norm_sets(
    family: TreeFamily,
    eps: Fraction | None = None,
    p: PValue | None = None,
) -> tuple[tuple[DecoratedTree, ...], tuple[DecoratedTree, ...]]:
    """Tree and generator sets entering the homogeneous norm."""
    eps = Fraction(family.params.eps) if eps is None else Fraction(eps)
    p = family.params.p if p is None else p
    gens = plus_generators(family, eps, p)
    return family.B + family.Bdot, gens.Uplus


def _offset_mask(grid: Grid, off: Offset) -> np.ndarray:
    """True where x + off stays inside the fundamental cell.

    Wrapped rows see folded coordinate fields and are excluded from
    offset character norms; see the module docstring.
    """
    mask = np.ones(grid.shape, dtype=bool)
    for axis, o in enumerate(off):
        if o == 0:
            continue
        idx = np.arange(grid.shape[axis])
        ok = idx < grid.shape[axis] - o if o > 0 else idx >= -o
        shape = [1] * grid.dim
        shape[axis] = grid.shape[axis]
        mask &= ok.reshape(shape)
    return mask


def _snorm_scalar(grid: Grid, off: Offset) -> float:
    ys = [off[i] * grid.spacings[i] for i in range(grid.dim)]
    return math.sqrt(abs(ys[0])) + sum(abs(y) for y in ys[1:])


def _interp_row_value(
    model: Model,
    second: Model | None,
    t: DecoratedTree,
    ladder: Sequence[float],
    m: int,
    lp: float,
    a: float,
) -> float:
    r4 = float(model.degree(t)) / 4.0
    best = 0.0
    for time in ladder:
        diag = model._qt_diag(t, time, m)
        if second is not None:
            diag = diag - second._qt_diag(t, time, m)
        val = weighted_lp_norm(GridField(model.grid, diag), lp, a)
        best = max(best, time**-r4 * val)
    return best


def _char_row_value(
    model: Model,
    second: Model | None,
    mu: DecoratedTree,
    offsets: Sequence[Offset],
    lp: float,
    a: float,
) -> float:
    base = model.g_values(mu)
    if second is not None:
        base = base - second.g_values(mu)
    part1 = weighted_lp_norm(GridField(model.grid, base), lp, a)
    part2 = 0.0
    r = float(model.degree(mu))
    for off in offsets:
        vals = model._g_offset(mu, off)
        if second is not None:
            vals = vals - second._g_offset(mu, off)
        vals = np.where(_offset_mask(model.grid, off), vals, 0.0)
        norm = weighted_lp_norm(GridField(model.grid, vals), lp, a)
        ysn = _snorm_scalar(model.grid, off)
        part2 = max(part2, (1.0 + ysn) ** (-a) * norm / ysn**r)
    return part1 + part2


def _check_comparable(m1: Model, m2: Model) -> None:
    if m2.grid is not m1.grid and m2.grid != m1.grid:
        raise ValueError("models live on different grids")
    if (m1.eps, m1.p) != (m2.eps, m2.p):
        raise ValueError("models were built at different (eps, p)")


def model_norms(
    model: Model,
    trees: Sequence[DecoratedTree],
    generators: Sequence[DecoratedTree],
    mode: str = "inhom",
    a: float | None = None,
    second: Model | None = None,
    time_ladder: Sequence[float] | None = None,
    offsets: Sequence[Offset] | None = None,
    smoothing_order: int = 0,
) -> ModelNormReport:
    """Seminorm report over explicit tree and generator sets.

    ``mode`` is ``inhom`` (integrability read off each symbol) or
    ``hom`` (sup norms, each symbol's value raised to one over its
    noise-edge count; symbols without noise edges are skipped and
    listed).  When ``second`` is given every row measures the
    difference of the two models instead, which is the model distance.
    """
    if mode not in ("inhom", "hom"):
        raise ValueError(f"unknown norm mode {mode!r}")
    if second is not None:
        _check_comparable(model, second)
    a = float(model._p.a) if a is None else float(a)
    ladder = tuple(time_ladder) if time_ladder is not None else default_time_ladder()
    offs = tuple(offsets) if offsets is not None else default_offsets(model.grid)
    if any(t <= 0 or t > 1 for t in ladder):
        raise ValueError("time ladder must lie in (0, 1]")

    rows: list[NormRow] = []
    skipped: list[str] = []
    for t in trees:
        lp = math.inf if mode == "hom" else _lp_float(t, model.p)
        value = _interp_row_value(model, second, t, ladder, smoothing_order, lp, a)
        if mode == "hom":
            n_oc = t.label_count(O_LABEL)
            if n_oc == 0:
                skipped.append(format_tree(t))
                continue
            value = value ** (1.0 / n_oc)
        rows.append(NormRow("interp", format_tree(t), model.degree(t), lp, value))
    for mu in generators:
        lp = math.inf if mode == "hom" else _lp_float(mu, model.p)
        value = _char_row_value(model, second, mu, offs, lp, a)
        if mode == "hom":
            n_oc = mu.label_count(O_LABEL)
            if n_oc == 0:
                skipped.append(format_tree(mu))
                continue
            value = value ** (1.0 / n_oc)
        rows.append(NormRow("char", format_tree(mu), model.degree(mu), lp, value))

    interp_part = max((r.value for r in rows if r.kind == "interp"), default=0.0)
    char_part = max((r.value for r in rows if r.kind == "char"), default=0.0)
    skeleton = {
        "grid": f"d={model.grid.d} nt={model.grid.nt} nx={model.grid.nx}"
        f" T={model.grid.T:g} L={model.grid.L:g}",
        "weight_a": a,
        "time_ladder": [float(x) for x in ladder],
        "offsets": [list(o) for o in offs],
        "smoothing_order": smoothing_order,
        "offset_weight": "scalar (1+|y|_s)^(-a) on the offset itself",
        "base_points": "full grid",
    }
    return ModelNormReport(
        mode=mode,
        rows=rows,
        interp_part=interp_part,
        char_part=char_part,
        total=interp_part + char_part,
        skeleton=skeleton,
        skipped=tuple(skipped),
    )


def _lp_float(t: DecoratedTree, p: PValue) -> float:
    got = integrability(t, p)
    return math.inf if got == INF else float(got)


def model_distance(
    m1: Model,
    m2: Model,
    trees: Sequence[DecoratedTree],
    generators: Sequence[DecoratedTree],
    mode: str = "inhom",
    **kwargs,
) -> float:
    """Aggregate distance; every row measures a difference of models."""
    return model_norms(m1, trees, generators, mode=mode, second=m2, **kwargs).total


def recentered_qt_profile(
    model: Model,
    t: DecoratedTree,
    time_ladder: Sequence[float] | None = None,
    lp: float | None = None,
    a: float = 0.0,
    smoothing_order: int = 0,
) -> list[tuple[float, float]]:
    """(t, norm of the smoothed recentered diagonal) rows for slope fits."""
    ladder = tuple(time_ladder) if time_ladder is not None else default_time_ladder()
    lp = _lp_float(t, model.p) if lp is None else lp
    out = []
    for time in ladder:
        diag = model._qt_diag(t, time, smoothing_order)
        out.append((float(time), weighted_lp_norm(GridField(model.grid, diag), lp, a)))
    return out
