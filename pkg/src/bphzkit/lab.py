"""Monte-Carlo character estimation and numerical experiments on models.

The estimator fixes the renormalization character by forcing empirical
means of all negative-degree trees to vanish, processing trees in the
partial order induced by extraction so each counterterm only depends on
already-fixed ones.  The experiment drivers then stress the shift
identities and norm bounds on sampled noise: the recentering binomial
identity in both its field and character forms, the per-tree expansion
chain behind the shift-continuity bound together with its aggregate
ratio form, and the tail behaviour of the homogeneous model norm.
Every driver returns an :class:`ExperimentReport` stamped with a
config fingerprint so a report is reproducible from its own header.

Estimates of sup-type quantities over the unit shift ball use a fixed
probe family (low-frequency trig modes plus smooth random fields,
normalized in the shift norm).  They are recorded lower bounds, never
claims about the true sup.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .config import fingerprint
from .degrees import INF, StructureParams, degree
from .grammar import format_tree
from .grids import Grid, GridField, sample_noise
from .hopf import check_RD_commutation
from .kernels import bank_for, h_norm, mollify
from .models import Model, hom_norm_sets, model_norms, recentered_qt_profile
from .rules import Rule, bphz_key, check_variance_condition, generate_B, plus_generators
from .trees import (
    DecoratedTree,
    K_LABEL,
    O_LABEL,
    graft,
    multiindices_of_size_at_most,
    noise_edges,
    shift_edges,
)

__all__ = [
    "BphzEstimate",
    "ExperimentReport",
    "TciConstants",
    "estimate_bphz",
    "recheck_centering",
    "second_moment_oracle",
    "cross_moment_oracle",
    "verify_binomial_identity",
    "binomial_identity_sweep",
    "dual_pairing_sweep",
    "rd_commutation_sweep",
    "verify_holder_bound",
    "tail_experiment",
    "tci_bookkeeping",
    "build_probe_family",
    "DEFAULT_H_LADDER",
]

# RNG stream offsets; estimation samples use streams 0..samples-1.
HOLD_OUT_STREAM = 1 << 20
SHIFT_STREAM = 1 << 21
PROBE_STREAM = 1 << 22

DEFAULT_H_LADDER = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


@dataclass
class ExperimentReport:
    """Outcome of one experiment run.

    rows are machine-readable dicts; series holds (x, y) curves for
    plotting.  The config dict is hashed into config_hash so the header
    pins the exact inputs.
    """

    experiment: str
    config: dict
    rows: list[dict]
    passed: bool
    notes: tuple[str, ...] = ()
    series: dict[str, list[tuple[float, float]]] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return fingerprint(self.config)

    def to_lines(self) -> list[str]:
        out = [
            f"experiment: {self.experiment}",
            f"config-hash: {self.config_hash}",
            f"status: {'PASS' if self.passed else 'FAIL'}",
        ]
        out.extend(f"note: {n}" for n in self.notes)
        out.extend(
            "  " + "  ".join(f"{k}={_fmt(v)}" for k, v in row.items())
            for row in self.rows
        )
        return out

    def __str__(self) -> str:
        return "\n".join(self.to_lines())


@dataclass
class BphzEstimate:
    """Estimated renormalization character, supported on the
    negative-degree trees of the family exactly."""

    rule_name: str
    values: dict[DecoratedTree, float]
    stderrs: dict[DecoratedTree, float]
    samples: int
    mollification: int
    seed: int
    law: str
    grid: Grid

    def as_counterterms(self) -> dict[DecoratedTree, float]:
        return dict(self.values)

    def config_dict(self) -> dict:
        return {
            "rule": self.rule_name,
            "samples": self.samples,
            "mollification": self.mollification,
            "seed": self.seed,
            "law": self.law,
            "grid": [self.grid.d, self.grid.nt, self.grid.nx, self.grid.T, self.grid.L],
        }

    def to_lines(self) -> list[str]:
        out = [
            f"bphz character ({self.rule_name}, {self.samples} samples, "
            f"mollification {self.mollification}, law {self.law}, "
            f"config {fingerprint(self.config_dict())})"
        ]
        for t in sorted(self.values, key=str):
            out.append(
                f"  chi[{format_tree(t)}] = {self.values[t]:+.8e}"
                f" +- {self.stderrs[t]:.2e}"
            )
        return out

    def __str__(self) -> str:
        return "\n".join(self.to_lines())


# ---------------------------------------------------------------------------
# character estimation


def estimate_bphz(
    rule: Rule,
    params: StructureParams,
    law: str = "gaussian-white",
    mollification: int = 3,
    samples: int = 1000,
    seed: int = 0,
    grid: Grid | None = None,
    eval_point: tuple[int, ...] | None = None,
) -> BphzEstimate:
    """Fix the character by vanishing empirical means, in extraction order.

    The mean is taken over both samples and grid points (the noise laws
    are translation invariant); pass ``eval_point`` to evaluate at a
    single grid index instead, which is what the stationarity check
    compares.  Raises when the family fails the variance condition or a
    sample produces non-finite values.
    """
    family = generate_B(rule, params)
    var = check_variance_condition(family, params)
    if not var.ok:
        bad = ", ".join(format_tree(t) for t, _ in var.violators)
        raise ValueError(f"variance condition fails for: {bad}")
    if grid is None:
        grid = Grid(params.d, 8, 8)
    order = sorted(family.B_minus, key=lambda t: bphz_key(t, params))

    chi: dict[DecoratedTree, float] = {}
    errs: dict[DecoratedTree, float] = {}

    # Trees are processed smallest-first, so when tau comes up every
    # counterterm its expansion needs is already in chi and interpret()
    # evaluates the fully renormalized product with chi(tau) still 0.
    for tau in order:
        per_sample = np.empty(samples)
        for s in range(samples):
            zeta = mollify(mollification, sample_noise(grid, law, seed, s))
            vals = Model(zeta, None, counterterms=chi).interpret(tau).values
            per_sample[s] = (
                float(vals[eval_point]) if eval_point is not None
                else float(vals.mean())
            )
        if not np.all(np.isfinite(per_sample)):
            raise ValueError(f"non-finite sample values for {format_tree(tau)}")
        chi[tau] = -float(per_sample.mean())
        errs[tau] = (
            float(per_sample.std(ddof=1) / math.sqrt(samples))
            if samples > 1
            else math.inf
        )
    return BphzEstimate(
        rule.name, chi, errs, samples, mollification, seed, law, grid
    )


def second_moment_oracle(grid: Grid, mollification: int) -> float:
    """Closed-form variance of the integrated mollified white noise.

    White noise on the lattice has i.i.d. node values of variance
    1/cell_volume, so a Fourier multiplier M maps it to a real field of
    pointwise variance sum |M|^2 / (nodes * cell_volume).  Uses the same
    quadrature-built multiplier as the sampler path, Hermitianized
    first: the field path keeps the real part, which on an even grid
    symmetrizes the one-sided Nyquist rows of the multiplier.
    """
    bank = bank_for(grid)
    mult = bank.calk_multiplier((0,) * grid.dim) * bank.mollifier_multiplier(
        mollification
    )
    neg = np.ix_(*[(-np.arange(s)) % s for s in mult.shape])
    herm = 0.5 * (mult + np.conj(mult[neg]))
    nodes = int(np.prod(grid.shape))
    return float((np.abs(herm) ** 2).sum() / (nodes * grid.cell_volume))


def recheck_centering(
    rule: Rule,
    params: StructureParams,
    estimate: BphzEstimate,
    trees: Sequence[DecoratedTree] | None = None,
    samples: int | None = None,
    tol_sigma: float = 4.0,
) -> ExperimentReport:
    """Held-out re-simulation of the centering property.

    Every non-positive-degree family tree is re-simulated on fresh RNG
    streams with the estimated character frozen; the renormalized mean
    must vanish within ``tol_sigma`` standard errors.
    """
    family = generate_B(rule, params)
    if trees is None:
        trees = [
            t
            for t in family.B
            if t.n_noise >= 1 and degree(t, Fraction(0), INF, params) <= 0
        ]
    samples = estimate.samples if samples is None else samples
    grid = estimate.grid
    chi = estimate.as_counterterms()
    acc = {t: np.empty(samples) for t in trees}
    for s in range(samples):
        zeta = mollify(
            estimate.mollification,
            sample_noise(grid, estimate.law, estimate.seed, HOLD_OUT_STREAM + s),
        )
        model = Model(zeta, None, counterterms=chi)
        for t in trees:
            acc[t][s] = float(model.interpret(t).values.mean())
    rows = []
    passed = True
    for t in trees:
        vals = acc[t]
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(samples))
        sigmas = abs(mean) / se if se > 0 else math.inf
        ok = sigmas <= tol_sigma
        passed &= ok
        rows.append(
            {
                "tree": format_tree(t),
                "mean": mean,
                "stderr": se,
                "sigmas": sigmas,
                "ok": ok,
            }
        )
    config = estimate.config_dict() | {
        "experiment_samples": samples,
        "tol_sigma": tol_sigma,
    }
    return ExperimentReport("bphz-centering", config, rows, passed)


# ---------------------------------------------------------------------------
# shift identities


def _all_noise_subsets(t: DecoratedTree):
    paths = noise_edges(t)
    for r in range(len(paths) + 1):
        yield from itertools.combinations(paths, r)


def _binomial_rows(
    m_sum: Model,
    m_split: Model,
    tree: DecoratedTree,
    base_indices: Sequence[tuple[int, ...]],
    pair_indices: Sequence[tuple[tuple[int, ...], tuple[int, ...]]],
    tol: float,
    atol: float,
) -> list[dict]:
    """Both displays of the shift binomial identity for one tree.

    Field display: the recentered interpretation under the combined
    noise equals the subset sum of relabeled trees under the split
    model, compared over the whole grid per base point.  Character
    display: same subset sum for the two-point characters of every
    positive planting of the tree, at sampled index pairs.  Errors are
    relative to the largest participating magnitude, with an absolute
    floor for values that are structural zeros (a band-limited field
    can annihilate a derivative planting outright, leaving only
    cancellation dust on both sides).
    """
    rows: list[dict] = []
    relabeled = [shift_edges(tree, V) for V in _all_noise_subsets(tree)]
    name = format_tree(tree)
    for x in base_indices:
        lhs = m_sum.recentered(x, tree).values
        acc = np.zeros(m_sum.grid.shape)
        for rt in relabeled:
            acc += m_split.recentered(x, rt).values
        gap = float(np.abs(lhs - acc).max())
        scale = max(float(np.abs(lhs).max()), float(np.abs(acc).max()), 1e-30)
        rows.append(
            {
                "display": "field",
                "tree": name,
                "base": str(tuple(x)),
                "rel_err": gap / scale,
                "ok": gap <= tol * scale + atol,
            }
        )
    # positive plantings of this tree at the model's (eps, p)
    dim = m_sum.grid.dim
    bound = degree(tree, m_sum.eps, m_sum.p, m_sum._p) + m_sum._p.beta0
    ks = [
        k
        for k in multiindices_of_size_at_most(dim, max(int(bound) + 1, 0))
        if Fraction(k.sdeg) < bound
    ]
    for k in ks:
        mu = graft(tree, K_LABEL, k)
        d_mu = [shift_edges(mu, V) for V in _all_noise_subsets(mu)]
        mu_name = format_tree(mu)
        for iy, ix in pair_indices:
            lhs = m_sum.pair_char(iy, ix, mu)
            terms = [m_split.pair_char(iy, ix, w) for w in d_mu]
            rhs = math.fsum(terms)
            gap = abs(lhs - rhs)
            scale = max(
                abs(lhs), abs(rhs), max((abs(v) for v in terms), default=0.0), 1e-30
            )
            rows.append(
                {
                    "display": "char",
                    "tree": mu_name,
                    "base": str((tuple(iy), tuple(ix))),
                    "rel_err": gap / scale,
                    "ok": gap <= tol * scale + atol,
                }
            )
    return rows


def _random_indices(rng: np.random.Generator, grid: Grid, n: int):
    return [
        tuple(int(rng.integers(0, s)) for s in grid.shape) for _ in range(n)
    ]


def verify_binomial_identity(
    noise: GridField,
    shift: GridField,
    counterterms: Mapping[DecoratedTree, float] | None,
    tree: DecoratedTree,
    params: StructureParams,
    eps=None,
    p=None,
    tol: float = 1e-6,
    atol: float = 1e-12,
    base_points: int = 2,
    char_pairs: int = 3,
    seed: int = 0,
) -> ExperimentReport:
    """Shift binomial identity for one tree on given noise and shift.

    Builds the combined-noise model and the split model with the same
    counterterms and compares both displays; on a breach the failing
    row carries the worst-case location.
    """
    grid = noise.grid
    m_sum = Model(
        GridField(grid, noise.values + shift.values),
        None,
        counterterms,
        params=params,
        eps=eps,
        p=p,
    )
    m_split = Model(noise, shift, counterterms, params=params, eps=eps, p=p)
    rng = np.random.default_rng([seed, 5252])
    rows = _binomial_rows(
        m_sum,
        m_split,
        tree,
        _random_indices(rng, grid, base_points),
        [tuple(_random_indices(rng, grid, 2)) for _ in range(char_pairs)],
        tol,
        atol,
    )
    passed = all(r["ok"] for r in rows)
    worst = max(rows, key=lambda r: r["rel_err"])
    config = {
        "tree": format_tree(tree),
        "grid": [grid.d, grid.nt, grid.nx, grid.T, grid.L],
        "tol": tol,
        "seed": seed,
        "counterterms": sorted(format_tree(t) for t in (counterterms or {})),
    }
    notes = ()
    if not passed:
        notes = (
            f"worst case at {worst['base']} on {worst['tree']}: "
            f"rel {worst['rel_err']:.3e}",
        )
    return ExperimentReport("binomial-identity", config, rows, passed, notes)


def binomial_identity_sweep(
    rule: Rule,
    params: StructureParams,
    grid: Grid | None = None,
    pairs: int = 20,
    seed: int = 0,
    tol: float = 1e-6,
    atol: float = 1e-12,
    counterterms: Mapping[DecoratedTree, float] | None = None,
    law: str = "gaussian-white",
    mollification: int = 3,
    shift_mollification: int = 2,
    shift_scale: float = 0.5,
    base_points: int = 2,
    char_pairs: int = 2,
) -> ExperimentReport:
    """Shift binomial identity over every family tree and sampled (noise,
    shift) pairs; one row per tree with the worst error across the sweep."""
    family = generate_B(rule, params)
    if grid is None:
        grid = Grid(params.d, 32, 32)
    worst: dict[str, dict] = {}
    for i in range(pairs):
        noise = mollify(mollification, sample_noise(grid, law, seed, i))
        raw = sample_noise(grid, law, seed, SHIFT_STREAM + i)
        shift = GridField(
            grid, shift_scale * mollify(shift_mollification, raw).values
        )
        m_sum = Model(
            GridField(grid, noise.values + shift.values),
            None,
            counterterms,
            params=params,
        )
        m_split = Model(noise, shift, counterterms, params=params)
        rng = np.random.default_rng([seed, 5252, i])
        bases = _random_indices(rng, grid, base_points)
        char_ix = [tuple(_random_indices(rng, grid, 2)) for _ in range(char_pairs)]
        for tree in family.B:
            for row in _binomial_rows(m_sum, m_split, tree, bases, char_ix, tol, atol):
                key = (row["display"], row["tree"])
                prev = worst.get(key)
                if prev is None or row["rel_err"] > prev["rel_err"]:
                    row = dict(row, sample=i)
                    worst[key] = row
    rows = sorted(worst.values(), key=lambda r: -r["rel_err"])
    passed = all(r["ok"] for r in rows)
    config = {
        "rule": rule.name,
        "grid": [grid.d, grid.nt, grid.nx, grid.T, grid.L],
        "pairs": pairs,
        "tol": tol,
        "seed": seed,
        "law": law,
        "mollification": [mollification, shift_mollification],
        "shift_scale": shift_scale,
    }
    return ExperimentReport("binomial-identity-sweep", config, rows, passed)


def rd_commutation_sweep(
    rule: Rule,
    params: StructureParams,
    draws: int = 10,
    seed: int = 0,
) -> ExperimentReport:
    """Exact commutation of renormalization with noise relabeling.

    For random rational characters supported on the negative trees,
    renormalizing a relabeled tree must equal relabeling the
    renormalized one, for every family tree and every noise subset.
    Pure bookkeeping, so equality is exact, not approximate.
    """
    family = generate_B(rule, params)
    rng = np.random.default_rng([seed, 53])
    rows = []
    passed = True
    for i in range(draws):
        chi = {
            t: Fraction(int(rng.integers(-999, 1000)), int(rng.integers(1, 60)))
            for t in family.B_minus
        }
        cases = failures = 0
        for t in family.B:
            for V in _all_noise_subsets(t):
                cases += 1
                failures += not check_RD_commutation(chi, t, V)
        rows.append({"draw": i, "cases": cases, "failures": failures, "ok": failures == 0})
        passed &= failures == 0
    config = {"rule": rule.name, "draws": draws, "seed": seed}
    return ExperimentReport("renorm-relabel-commutation", config, rows, passed)


def dual_pairing_sweep(
    rule: Rule,
    params: StructureParams,
    generators: Sequence[DecoratedTree] | None = None,
    gen_set: str = "Vplus",
    grid: Grid | None = None,
    pairs: int = 20,
    seed: int = 0,
    tol: float = 1e-8,
    law: str = "gaussian-white",
    mollification: int = 2,
    shift_mollification: int = 1,
    shift_scale: float = 0.3,
) -> ExperimentReport:
    """Two-point characters by direct pairing vs the kernel recursion.

    Agreement is |a-b| <= tol * max(1, |a|, |b|) per evaluation.  The
    default grid has unit cell volume so products of many noise factors
    stay conditioned.
    """
    family = generate_B(rule, params)
    if generators is None:
        gens_all = plus_generators(family, params.eps, params.p, params)
        generators = getattr(gens_all, gen_set)
    else:
        gen_set = "explicit"
    if grid is None:
        grid = Grid(params.d, 8, 8, T=8.0, L=8.0)
    noise = mollify(mollification, sample_noise(grid, law, seed, 0))
    raw = sample_noise(grid, law, seed, SHIFT_STREAM)
    shift = GridField(grid, shift_scale * mollify(shift_mollification, raw).values)
    model = Model(noise, shift, params=params)
    rng = np.random.default_rng([seed, 54])
    index_pairs = [tuple(_random_indices(rng, grid, 2)) for _ in range(pairs)]
    rows = []
    passed = True
    for mu in generators:
        worst_abs = 0.0
        worst_rel = 0.0
        ok = True
        for iy, ix in index_pairs:
            a = model.pair_char(iy, ix, mu)
            b = model.pair_char_recursive(iy, ix, mu)
            gap = abs(a - b)
            scale = max(1.0, abs(a), abs(b))
            ok &= gap <= tol * scale
            worst_abs = max(worst_abs, gap)
            worst_rel = max(worst_rel, gap / scale)
        passed &= ok
        rows.append(
            {
                "generator": format_tree(mu),
                "worst_abs": worst_abs,
                "worst_rel": worst_rel,
                "ok": ok,
            }
        )
    rows.sort(key=lambda r: -r["worst_rel"])
    config = {
        "rule": rule.name,
        "generators": len(generators),
        "gen_set": gen_set,
        "grid": [grid.d, grid.nt, grid.nx, grid.T, grid.L],
        "pairs": pairs,
        "tol": tol,
        "seed": seed,
    }
    return ExperimentReport("dual-pairing", config, rows, passed)


# ---------------------------------------------------------------------------
# shift-continuity chain


def build_probe_family(
    grid: Grid,
    params: StructureParams,
    count: int = 32,
    seed: int = 0,
) -> list[GridField]:
    """Normalized shift directions: trig modes first, then smooth noise.

    The first half walks separable cosine products in order of total
    mode number (with a sine variant on the first active axis for
    variety); the second half mollifies fixed random samples.  Every
    probe has unit shift norm.
    """
    extents = grid.extents
    coords = [grid.axis_coords(i) for i in range(grid.dim)]
    fields: list[GridField] = []

    def add(vals: np.ndarray, label: str) -> None:
        f = GridField(grid, np.ascontiguousarray(vals, dtype=float), label=label)
        scale = h_norm(f, params)
        if scale > 0:
            fields.append(GridField(grid, f.values / scale, label=label))

    def trig(mode: tuple[int, ...], use_sin: bool) -> np.ndarray:
        vals = np.ones(grid.shape)
        done_sin = False
        for axis, m in enumerate(mode):
            if m == 0:
                continue
            theta = 2.0 * math.pi * m * coords[axis] / extents[axis]
            fn = np.sin if (use_sin and not done_sin) else np.cos
            done_sin = done_sin or use_sin
            shape = [1] * grid.dim
            shape[axis] = grid.shape[axis]
            vals = vals * fn(theta).reshape(shape)
        return vals

    n_trig = count - count // 2
    for total in itertools.count():
        if len(fields) >= n_trig:
            break
        for mode in itertools.product(range(total + 1), repeat=grid.dim):
            if sum(mode) != total or len(fields) >= n_trig:
                continue
            add(trig(mode, False), f"probe-cos{mode}")
            if any(mode) and len(fields) < n_trig:
                add(trig(mode, True), f"probe-sin{mode}")
    i = 0
    while len(fields) < count:
        raw = sample_noise(grid, "gaussian-white", seed, PROBE_STREAM + i)
        add(mollify(2, raw).values, f"probe-rand{i}")
        i += 1
    return fields[:count]


def _chain_factors(
    m_dir: Model,
    tree: DecoratedTree,
    r_tau: float,
    a: float,
) -> list[tuple[int, float]]:
    """(|V|, factor) rows of the expansion chain for one tree.

    factor is the sup over the time ladder of t^(-r/4) times the sup
    norm of the smoothed recentered diagonal of the relabeled tree,
    evaluated on the unit-direction model; by multilinearity the
    relabeled contribution at shift size s is factor * s^|V|.
    """
    out = []
    paths = noise_edges(tree)
    for r in range(1, len(paths) + 1):
        for V in itertools.combinations(paths, r):
            relabeled = shift_edges(tree, V)
            prof = recentered_qt_profile(m_dir, relabeled, lp=math.inf, a=a)
            factor = max(t ** (-r_tau / 4.0) * v for t, v in prof)
            out.append((len(V), factor))
    return out


def verify_holder_bound(
    rule: Rule,
    params: StructureParams,
    samples: int = 100,
    h_ladder: Sequence[float] = DEFAULT_H_LADDER,
    grid: Grid | None = None,
    seed: int = 0,
    probes: int = 32,
    counterterms: Mapping[DecoratedTree, float] | None = None,
    law: str = "gaussian-white",
    mollification: int = 3,
    slack: float = 1e-6,
    ratio_bound: float = 10.0,
    lhat_samples: int = 4,
) -> ExperimentReport:
    """Shift-continuity of the renormalized model along an h-ladder.

    Per sample, a unit probe direction is scaled through the ladder.
    Checked per tree and ladder point: the homogeneous distance of the
    shifted model, raised to the tree's noise count, stays below the
    subset-sum of direction factors times s^|V| (the expansion chain,
    exact up to rounding and the given slack).  Checked per sample: the
    aggregate distance divided by max(s, s^(1/m)) is flat across the
    ladder within ``ratio_bound`` (max/median), and likewise for the
    inhomogeneous distance against max(s, s^m), with m the largest
    noise count of the family.  Probe-ball sup estimates are recorded
    for the first few samples as explicit lower bounds.
    """
    family = generate_B(rule, params)
    m_big = family.m_B
    if grid is None:
        grid = Grid(params.d, 8, 8)
    if counterterms is None:
        est = estimate_bphz(
            rule,
            params,
            law=law,
            mollification=mollification,
            samples=min(500, max(100, samples)),
            seed=seed,
            grid=grid,
        )
        counterterms = est.as_counterterms()
        chi_note = f"counterterms estimated internally ({est.samples} samples)"
    else:
        chi_note = "counterterms supplied by caller"
    probe_family = build_probe_family(grid, params, probes, seed)
    gens = plus_generators(family, params.eps, params.p, params).Vplus
    chain_trees = [t for t in family.B if t.label_count(O_LABEL) >= 1]
    u_trees, u_gens = hom_norm_sets(family)
    a = float(params.a)

    rows: list[dict] = []
    lhs_curve: dict[float, list[float]] = {s: [] for s in h_ladder}
    ratio_curve: dict[float, list[float]] = {s: [] for s in h_ladder}
    chain_violations = 0
    worst_chain_excess = 0.0
    ratios_ok = True

    for s_idx in range(samples):
        zeta = mollify(mollification, sample_noise(grid, law, seed, s_idx))
        direction = probe_family[s_idx % len(probe_family)]
        m_base = Model(zeta, None, counterterms, params=params)
        m_dir = Model(zeta, direction, counterterms, params=params)
        factors = {
            t: _chain_factors(m_dir, t, float(m_base.degree(t)), a)
            for t in chain_trees
        }
        q_hom: list[float] = []
        q_lip: list[float] = []
        for s_val in h_ladder:
            shifted = GridField(grid, zeta.values + s_val * direction.values)
            m_s = Model(shifted, None, counterterms, params=params)
            dist = model_norms(m_s, family.B, gens, mode="hom", second=m_base)
            for row in dist.rows:
                if row.kind != "interp":
                    continue
                tree = next(t for t in chain_trees if format_tree(t) == row.symbol)
                n_oc = tree.label_count(O_LABEL)
                lhs_pow = row.value**n_oc
                rhs = math.fsum(f * s_val**v for v, f in factors[tree])
                excess = lhs_pow - rhs
                if excess > slack * max(1.0, rhs):
                    chain_violations += 1
                    worst_chain_excess = max(
                        worst_chain_excess, excess / max(1.0, rhs)
                    )
            dist_in = model_norms(m_s, family.B, gens, mode="inhom", second=m_base)
            q_hom.append(dist.total / max(s_val, s_val ** (1.0 / m_big)))
            q_lip.append(dist_in.total / max(s_val, s_val**m_big))
            lhs_curve[s_val].append(dist.total)
            ratio_curve[s_val].append(q_hom[-1])
        spread_hom = max(q_hom) / np.median(q_hom)
        spread_lip = max(q_lip) / np.median(q_lip)
        sample_ok = spread_hom <= ratio_bound and spread_lip <= ratio_bound
        ratios_ok &= sample_ok
        row = {
            "sample": s_idx,
            "probe": direction.label,
            "spread_hom": float(spread_hom),
            "spread_lip": float(spread_lip),
            "ok": sample_ok,
        }
        if s_idx < lhat_samples:
            sup_probe = 0.0
            for probe in probe_family:
                m_p = Model(zeta, probe, counterterms, params=params)
                sup_probe = max(
                    sup_probe,
                    model_norms(m_p, u_trees, u_gens, mode="hom").total,
                )
            l_hat = (1.0 + sup_probe) ** (1.0 - 1.0 / m_big)
            row["L_hat"] = float(l_hat)
            row["implied_const"] = float(max(q_hom) / l_hat)
        rows.append(row)

    passed = chain_violations == 0 and ratios_ok
    config = {
        "rule": rule.name,
        "samples": samples,
        "h_ladder": list(h_ladder),
        "grid": [grid.d, grid.nt, grid.nx, grid.T, grid.L],
        "seed": seed,
        "probes": probes,
        "law": law,
        "mollification": mollification,
        "slack": slack,
        "ratio_bound": ratio_bound,
        "m_B": m_big,
    }
    notes = (
        chi_note,
        f"chain checks: {len(chain_trees) * len(h_ladder) * samples}, "
        f"violations {chain_violations}"
        + (f" (worst excess {worst_chain_excess:.3e})" if chain_violations else ""),
        "L_hat rows are probe-family lower bounds, not the operator sup",
    )
    series = {
        "lhs_vs_h": [(s, float(np.median(lhs_curve[s]))) for s in h_ladder],
        "ratio_vs_h": [(s, float(np.median(ratio_curve[s]))) for s in h_ladder],
    }
    return ExperimentReport(
        "holder-chain", config, rows, passed, notes, series
    )


# ---------------------------------------------------------------------------
# tails and bookkeeping


def tail_experiment(
    rule: Rule,
    params: StructureParams,
    samples: int = 2000,
    seed: int = 0,
    grid: Grid | None = None,
    counterterms: Mapping[DecoratedTree, float] | None = None,
    law: str = "gaussian-white",
    mollification: int = 3,
    top_fraction: float = 0.1,
    r2_threshold: float = 0.9,
) -> ExperimentReport:
    """Distribution of the homogeneous model norm over many samples.

    A Gaussian-type tail makes log-survival decay linearly in the
    squared norm: the top-decile fit must have negative slope with R^2
    above threshold.  Also reported: a concavity profile of the
    log-survival curve in the squared norm, and the slope refitted on
    the first half of the samples (sign stability under doubling).
    """
    family = generate_B(rule, params)
    if grid is None:
        grid = Grid(params.d, 8, 8)
    if counterterms is None:
        est = estimate_bphz(
            rule,
            params,
            law=law,
            mollification=mollification,
            samples=min(500, samples),
            seed=seed,
            grid=grid,
        )
        counterterms = est.as_counterterms()
        chi_note = f"counterterms estimated internally ({est.samples} samples)"
    else:
        chi_note = "counterterms supplied by caller"
    gens = plus_generators(family, params.eps, params.p, params).Vplus

    norms = np.empty(samples)
    for s in range(samples):
        zeta = mollify(mollification, sample_noise(grid, law, seed, s))
        model = Model(zeta, None, counterterms, params=params)
        norms[s] = model_norms(model, family.B, gens, mode="hom").total

    def tail_fit(values: np.ndarray) -> tuple[float, float, list[tuple[float, float]]]:
        srt = np.sort(values)[::-1]
        k = max(10, int(len(srt) * top_fraction))
        xs = srt[:k] ** 2
        ys = np.log((np.arange(k) + 1.0) / len(srt))
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        ss_tot = float(((ys - ys.mean()) ** 2).sum())
        r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 0.0
        return float(slope), r2, list(zip(xs.tolist(), ys.tolist()))

    slope, r2, curve = tail_fit(norms)
    slope_half, _, _ = tail_fit(norms[: samples // 2])

    # concavity of log-survival in r^2 on a knot grid from the median up
    knots = np.linspace(
        float(np.median(norms)) ** 2, float(norms.max()) ** 2, 21
    )[:-1]
    surv = np.array([np.mean(norms**2 > x) for x in knots])
    keep = surv > 0
    logs = np.log(surv[keep])
    dd = np.diff(logs, 2)
    concave_frac = float(np.mean(dd <= 1e-9)) if dd.size else 1.0

    finite = bool(np.all(np.isfinite(norms)) and np.all(norms > 0))
    passed = finite and slope < 0 and r2 >= r2_threshold
    rows = [
        {
            "samples": samples,
            "slope": slope,
            "r2": r2,
            "slope_first_half": slope_half,
            "sign_stable": slope_half < 0,
            "concave_fraction": concave_frac,
            "norm_median": float(np.median(norms)),
            "norm_max": float(norms.max()),
            "all_finite_positive": finite,
            "ok": passed,
        }
    ]
    config = {
        "rule": rule.name,
        "samples": samples,
        "seed": seed,
        "grid": [grid.d, grid.nt, grid.nx, grid.T, grid.L],
        "law": law,
        "mollification": mollification,
        "top_fraction": top_fraction,
        "r2_threshold": r2_threshold,
    }
    series = {"log_survival_vs_r2": curve}
    return ExperimentReport(
        "tail", config, rows, passed, (chi_note,), series
    )


@dataclass(frozen=True)
class TciConstants:
    """Derived constants of the transport-cost bookkeeping."""

    alpha: float
    r: float
    a_circ: float
    moment_norm: float
    a_alpha: float
    table: tuple[tuple[float, float], ...]

    def cost_map(self, t: float) -> float:
        """The increasing map whose inverse is ell."""
        return (t ** (self.alpha / (2 * self.r)) + t ** (self.alpha / 2)) / self.a_alpha

    def ell(self, s: float) -> float:
        """Inverse of cost_map by bisection; ell(0) = 0."""
        if s < 0:
            raise ValueError("ell is defined for s >= 0")
        if s == 0:
            return 0.0
        hi = 1.0
        while self.cost_map(hi) < s:
            hi *= 2.0
            if hi > 1e300:
                raise OverflowError("ell bisection bracket overflow")
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.cost_map(mid) < s:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def rows(self) -> list[dict]:
        head = {
            "alpha": self.alpha,
            "r": self.r,
            "a_circ": self.a_circ,
            "moment_norm": self.moment_norm,
            "a_alpha": self.a_alpha,
            "quadratic_reference": "t^2",
        }
        return [head] + [{"s": s, "ell": e} for s, e in self.table]


def tci_bookkeeping(
    alpha: float,
    r: float,
    a_circ: float,
    L_moments: Sequence[float],
    s_max: float | None = None,
    points: int = 33,
) -> TciConstants:
    """Constants for the alpha-cost transport inequality.

    a_alpha divides the minimum of two powers of a_circ by twice the
    L^{2/(2-alpha)} moment norm of L^alpha; ell_alpha inverts
    t -> (t^{alpha/2r} + t^{alpha/2}) / a_alpha on a tabulated range.
    With alpha=r=a_circ=1 and unit moments the map is 4*sqrt(t), so
    ell_1(s) = s^2/16.
    """
    if not 1.0 <= alpha < 2.0:
        raise ValueError(f"alpha must lie in [1, 2), got {alpha}")
    if r < 1.0:
        raise ValueError(f"r must be >= 1, got {r}")
    if a_circ <= 0:
        raise ValueError("a_circ must be positive")
    moments = np.asarray(list(L_moments), dtype=float)
    if moments.size == 0 or not np.all(moments >= 0):
        raise ValueError("need nonnegative moment samples of L")
    q = 2.0 * alpha / (2.0 - alpha)
    moment_norm = float(np.mean(moments**q) ** ((2.0 - alpha) / 2.0))
    if moment_norm == 0:
        raise ValueError("moment norm of L vanishes")
    a_alpha = min(a_circ ** (alpha / (2 * r)), a_circ ** (alpha / 2)) / (
        2.0 * moment_norm
    )
    tci = TciConstants(alpha, r, a_circ, moment_norm, a_alpha, ())
    if s_max is None:
        s_max = tci.cost_map(4.0)
    table = tuple(
        (float(s), tci.ell(float(s))) for s in np.linspace(0.0, s_max, points)
    )
    return TciConstants(alpha, r, a_circ, moment_norm, a_alpha, table)
