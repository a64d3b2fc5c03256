"""Command-line front end.

One command per process; every run starts from a validated Config
(file plus flag overrides) whose fingerprint is embedded in the
output, so a report names the exact configuration that produced it.
Exit codes: 0 success, 1 a verification failed, 2 configuration or
input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import lab
from .config import (
    Config,
    ConfigError,
    load_config,
    parse_rational,
    pvalue_str,
    rational_str,
)
from .degrees import degree
from .grammar import TreeParseError, format_tree, parse_tree
from .grids import sample_noise
from .hopf import coaction, coproduct_plus, renorm_M, tensor_sum_to_lines
from .kernels import mollify
from .models import Model, hom_norm_sets, model_norms
from .rules import bphz_key, check_variance_condition, generate_B
from .trees import Edge, K_LABEL, MultiIndex, make_tree

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="JSON config file")
    shared.add_argument("--preset", metavar="NAME", help="built-in rule preset")
    shared.add_argument("--seed", type=int, metavar="U64")
    shared.add_argument("--samples", type=int, metavar="N")
    shared.add_argument("--grid", metavar="NT,NX", help="grid points per axis")
    shared.add_argument("--eps", metavar="RATIONAL", help="degree shift")
    shared.add_argument("--p", metavar="P", help="integrability in [2, inf]")
    shared.add_argument("--out", metavar="DIR", help="directory for artifacts")
    shared.add_argument("--tol", type=float, metavar="X")
    shared.add_argument(
        "--chi",
        metavar="PATH",
        help="counterterm table (JSON, as written by bphz-estimate)",
    )

    ap = argparse.ArgumentParser(
        prog="bphzkit",
        description="decorated-tree renormalization toolkit",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("enumerate", parents=[shared], help="list the tree family")
    for name, hint in (
        ("coproduct", "plus-coproduct or coaction of a tree expression"),
        ("renormalize", "symbolic renormalization of a tree expression"),
    ):
        p = sub.add_parser(name, parents=[shared], help=hint)
        p.add_argument("expr", help="tree expression, e.g. 'I[K,(0,0,0)](O)'")
    sub.add_parser("bphz-estimate", parents=[shared], help="estimate the character")
    sub.add_parser("norms", parents=[shared], help="model norm report on a sample")
    v = sub.add_parser("verify", parents=[shared], help="run a verification harness")
    v.add_argument(
        "what",
        choices=("binomial", "commutation", "dual-pairing", "holder", "tail"),
    )
    sub.add_parser("check-rule", parents=[shared], help="variance condition check")
    return ap


def _build_config(args) -> Config:
    data = load_config(args.config).to_dict() if args.config else {}
    if args.preset:
        data["preset"] = args.preset
        data.pop("rule", None)
    if args.eps is not None or args.p is not None:
        params = data.setdefault("params", {})
        if args.eps is not None:
            params["eps"] = args.eps
        if args.p is not None:
            params["p"] = args.p
    if args.grid is not None:
        try:
            nt, nx = (int(part) for part in args.grid.split(","))
        except ValueError:
            raise ConfigError(f"--grid wants NT,NX integers, got {args.grid!r}")
        data.setdefault("grid", {}).update(nt=nt, nx=nx)
    exp = data.setdefault("experiment", {})
    if args.seed is not None:
        exp["seed"] = args.seed
    if args.samples is not None:
        exp["samples"] = args.samples
    if args.tol is not None:
        exp["tol"] = args.tol
    if not exp:
        del data["experiment"]
    return Config.from_dict(data)


def _load_chi(args, dim: int) -> dict:
    if args.chi is None:
        raise ConfigError("this command needs a counterterm table (--chi PATH)")
    try:
        with open(args.chi) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read chi table {args.chi}: {exc}") from exc
    values = data.get("values", data) if isinstance(data, dict) else None
    if not isinstance(values, dict):
        raise ConfigError("chi table must be a JSON object of expr: value")
    out = {}
    for expr, val in values.items():
        tree = parse_tree(expr, dim=dim)
        out[tree] = parse_rational(val) if isinstance(val, str) else float(val)
    return out


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _emit_text(args, name: str, lines: list[str]) -> None:
    for line in lines:
        print(line)
    out = _out_dir(args)
    if out is not None:
        (out / f"{name}.txt").write_text("\n".join(lines) + "\n")


def _emit_report(args, report: lab.ExperimentReport) -> int:
    print(report)
    out = _out_dir(args)
    if out is not None:
        payload = {
            "experiment": report.experiment,
            "config": report.config,
            "config_hash": report.config_hash,
            "passed": report.passed,
            "notes": list(report.notes),
            "rows": report.rows,
        }
        name = report.experiment
        (out / f"{name}.json").write_text(
            json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n"
        )
        for series, points in report.series.items():
            lines = ["# x y"] + [f"{x:.17g} {y:.17g}" for x, y in points]
            (out / f"{name}-{series}.dat").write_text("\n".join(lines) + "\n")
    return EXIT_OK if report.passed else EXIT_FAIL


def _coeff_str(c) -> str:
    if isinstance(c, Fraction):
        return rational_str(c)
    return f"{float(c):.12g}"


def cmd_enumerate(cfg: Config, args) -> int:
    rule, params = cfg.resolve()
    family = generate_B(rule, params)
    lines = [
        f"tree family for rule {rule.name}"
        f" (d={params.d}, eps={rational_str(params.eps)},"
        f" p={pvalue_str(params.p)}, config {cfg.fingerprint()})"
    ]
    # the noise symbol leads, the rest follow the processing order
    order = lambda t: (t != family.noise_symbol, bphz_key(t, params))
    for title, trees in (
        ("B", family.B),
        ("Bdot", family.Bdot),
        ("Bdotbar", family.Bdotbar),
        ("B_minus", family.B_minus),
    ):
        lines.append(f"{title} ({len(trees)}):")
        for t in sorted(trees, key=order):
            deg = degree(t, params.eps, params.p, params)
            lines.append(f"  {rational_str(deg):>10}  {format_tree(t)}")
    _emit_text(args, "enumerate", lines)
    return EXIT_OK


def _plus_sector(t, params) -> bool:
    """Monomials and products of positive plantings live in the plus
    algebra; everything else goes through the coaction."""
    if t.is_bare:
        return True
    if any(e.label is not K_LABEL for e in t.edges):
        return False
    zero = MultiIndex.zero(t.dim)
    for e in t.edges:
        planted = make_tree(zero, (Edge(K_LABEL, e.dec, e.child),))
        if degree(planted, params.eps, params.p, params) <= 0:
            return False
    return True


def cmd_coproduct(cfg: Config, args) -> int:
    rule, params = cfg.resolve()
    t = parse_tree(args.expr, dim=1 + rule.d)
    if _plus_sector(t, params):
        ts = coproduct_plus(t, params.eps, params.p, params)
        head = "plus-coproduct"
    else:
        ts = coaction(t, params.eps, params.p, params)
        head = "coaction"
    lines = [f"{head} of {format_tree(t)} at eps={rational_str(params.eps)},"
             f" p={pvalue_str(params.p)}:"]
    lines.extend("  " + line for line in tensor_sum_to_lines(ts))
    _emit_text(args, "coproduct", lines)
    return EXIT_OK


def cmd_renormalize(cfg: Config, args) -> int:
    rule, params = cfg.resolve()
    chi = _load_chi(args, dim=1 + rule.d)
    t = parse_tree(args.expr, dim=1 + rule.d)
    total = renorm_M(chi, t)
    lines = [f"renormalized {format_tree(t)} with chi on {len(chi)} trees:"]
    for s, c in sorted(total, key=lambda item: format_tree(item[0])):
        lines.append(f"  {_coeff_str(c):>22}  {format_tree(s)}")
    _emit_text(args, "renormalize", lines)
    return EXIT_OK


def cmd_estimate(cfg: Config, args) -> int:
    rule, params = cfg.resolve()
    est = lab.estimate_bphz(
        rule,
        params,
        law=cfg.experiment_value("law", "gaussian-white"),
        mollification=cfg.experiment_value("mollification", 3),
        samples=cfg.experiment_value("samples", 1000),
        seed=cfg.experiment_value("seed", 0),
        grid=cfg.make_grid(),
    )
    _emit_text(args, "bphz-estimate", est.to_lines())
    out = _out_dir(args)
    if out is not None:
        payload = {
            "rule": est.rule_name,
            "config": est.config_dict(),
            "values": {format_tree(t): v for t, v in sorted(est.values.items(), key=lambda kv: str(kv[0]))},
            "stderrs": {format_tree(t): v for t, v in sorted(est.stderrs.items(), key=lambda kv: str(kv[0]))},
        }
        (out / "chi.json").write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n"
        )
    return EXIT_OK


def cmd_norms(cfg: Config, args) -> int:
    rule, params = cfg.resolve()
    family = generate_B(rule, params)
    grid = cfg.make_grid()
    zeta = mollify(
        cfg.experiment_value("mollification", 3),
        sample_noise(
            grid,
            cfg.experiment_value("law", "gaussian-white"),
            cfg.experiment_value("seed", 0),
        ),
    )
    chi = _load_chi(args, dim=grid.dim) if args.chi else None
    model = Model(zeta, None, counterterms=chi, params=params)
    trees, gens = hom_norm_sets(family, params.eps, params.p)
    lines = [
        f"model norms for {rule.name} on {grid.nt}x{grid.nx}^{grid.d} grid"
        f" (seed {cfg.experiment_value('seed', 0)},"
        f" chi {'loaded' if chi else 'absent'},"
        f" config {cfg.fingerprint()})"
    ]
    for mode in ("inhom", "hom"):
        rep = model_norms(model, trees, gens, mode=mode)
        lines.append(f"{mode}: total {rep.total:.6g} "
                     f"(interp {rep.interp_part:.6g}, char {rep.char_part:.6g})")
        for row in rep.rows:
            lines.append(
                f"  {row.kind:<7} {float(row.degree):+8.3f}"
                f"  lp={'inf' if row.lp == float('inf') else f'{row.lp:g}'}"
                f"  {row.value:12.6g}  {row.symbol}"
            )
        if rep.skipped:
            lines.append(f"  (skipped in hom mode: {', '.join(rep.skipped)})")
    _emit_text(args, "norms", lines)
    return EXIT_OK


def cmd_verify(cfg: Config, args) -> int:
    rule, params = cfg.resolve()
    seed = cfg.experiment_value("seed", 0)
    law = cfg.experiment_value("law", "gaussian-white")
    if args.what == "binomial":
        side = 32 if rule.d <= 2 else 16
        report = lab.binomial_identity_sweep(
            rule,
            params,
            grid=cfg.make_grid(side, side),
            pairs=20,
            seed=seed,
            tol=cfg.experiment_value("tol", 1e-6),
            law=law,
        )
    elif args.what == "commutation":
        report = lab.rd_commutation_sweep(rule, params, draws=10, seed=seed)
    elif args.what == "dual-pairing":
        report = lab.dual_pairing_sweep(
            rule,
            params,
            pairs=20,
            seed=seed,
            tol=cfg.experiment_value("tol", 1e-8),
        )
    elif args.what == "holder":
        report = lab.verify_holder_bound(
            rule,
            params,
            samples=cfg.experiment_value("samples", 100),
            grid=cfg.make_grid(),
            seed=seed,
            probes=cfg.experiment_value("probes", 32),
            law=law,
            mollification=cfg.experiment_value("mollification", 3),
        )
    else:
        report = lab.tail_experiment(
            rule,
            params,
            samples=cfg.experiment_value("samples", 2000),
            seed=seed,
            grid=cfg.make_grid(),
            law=law,
            mollification=cfg.experiment_value("mollification", 3),
        )
    return _emit_report(args, report)


def cmd_check_rule(cfg: Config, args) -> int:
    rule, params = cfg.resolve()
    family = generate_B(rule, params)
    vr = check_variance_condition(family, params)
    lines = [
        f"variance condition for {rule.name}:"
        f" degree floor {rational_str(vr.threshold)}",
        f"status: {'PASS' if vr.ok else 'FAIL'}",
    ]
    for t, deg in vr.violators:
        lines.append(f"  violator: {format_tree(t)} at degree {rational_str(deg)}")
    _emit_text(args, "check-rule", lines)
    return EXIT_OK if vr.ok else EXIT_FAIL


_COMMANDS = {
    "enumerate": cmd_enumerate,
    "coproduct": cmd_coproduct,
    "renormalize": cmd_renormalize,
    "bphz-estimate": cmd_estimate,
    "norms": cmd_norms,
    "verify": cmd_verify,
    "check-rule": cmd_check_rule,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, TreeParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
