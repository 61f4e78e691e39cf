"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 assumption violation,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np
import scipy.io

from .config import ConfigError, RunConfig, apply_overrides, config_from_dict, parse_config
from .derivatives import DerivativeContext, multi_indices, regularity_certificate
from .errors import AssumptionViolation, InvalidArgument, NumericalFailure
from .estimator import (Problem, build_lattice, estimate, estimate_with_rule, fem_study,
                        format_complex, product_upsilon, qmc_rate_study, study_csv,
                        truncation_study)
from .fem import assemble_system, assemble_vnorm_gram
from .field import AffineField, summability, truncation_quantities, verify_A1
from .geometry import compute_constants, make_square_domain, select_parameters
from .qmc import (LatticeRule, cbc_poly_lattice, export_weights_csv, format_rule, import_rule,
                  interlacing_factor, pod_weights, spod_weights, worst_case_error)

SUBCOMMANDS = ("constants", "check-field", "solve", "fem-convergence", "trunc-study",
               "qmc-convergence", "cbc-construct", "regularity-check")

EXIT_OK, EXIT_CONFIG, EXIT_ASSUMPTION, EXIT_NUMERICAL = 0, 2, 3, 4


def _header(config: RunConfig) -> str:
    return f"# config: {config.to_json()}\n# seed: {config.seed}\n"


def _table(config: RunConfig, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(_header(config))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def cmd_constants(config: RunConfig, args) -> dict[str, str]:
    geom = make_square_domain(config.side)
    field = AffineField(config.field.n0, config.field.amplitude, config.field.theta,
                        config.field.s, config.side)
    bounds = verify_A1(field, grid_res=config.grid_res, safety=config.safety)
    o = config.params
    params = select_parameters(bounds, geom, alpha1=o.alpha1, A=o.A, alpha2=o.alpha2,
                               beta2_hat=o.beta2_hat)
    rows = []
    for kL in config.kL_list:
        c = compute_constants(kL / geom.L, params, bounds, geom)
        rows.append([float(kL), c.c_coer, c.c_cont, c.c_func, c.c_r, c.c_regu])
    return {"constants.csv": _table(config, ["kL", "c_coer", "c_cont", "c_func", "c_r", "c_regu"],
                                    rows)}


def cmd_check_field(config: RunConfig, args) -> dict[str, str]:
    problem = Problem(config)
    b = problem.bounds
    rep = truncation_quantities(problem.field, problem.constants, config.p0, config.s,
                                p1=config.p1, L=problem.geom.L)
    summ = summability(problem.field, config.p0, config.p1, config.k, problem.geom.L) \
        if problem.field.s_max else None
    rows = [
        ["n_min", float(b.n_min)], ["n_max", float(b.n_max)],
        ["b_min", float(b.b_min)], ["b_max", float(b.b_max)],
        ["tail1_bound", float(rep.tail1_bound)], ["tail2_bound", float(rep.tail2_bound)],
        ["s_star", rep.s_star], ["ell_star", rep.ell_star],
        ["K0_partial", rep.K0_partial], ["K1_partial", rep.K1_partial],
        ["K0_converges", bool(summ.K0_converges) if summ else True],
        ["K1_converges", bool(summ.K1_converges) if summ else True],
        ["pert_margin", rep.pert_margin], ["pert_margin_kl", rep.pert_margin_kl],
    ]
    return {"check_field.csv": _table(config, ["quantity", "value"], rows)}


def cmd_solve(config: RunConfig, args) -> dict[str, str]:
    problem = Problem(config)
    out = {}
    if args.dump_system:
        y0 = np.zeros(config.s)
        sysm = assemble_system(problem.space, problem.field, y0, config.k, problem.params)
        for name, obj in (("matrix.mtx", sysm.matrix), ("rhs.mtx", sysm.rhs.reshape(-1, 1))):
            buf = io.BytesIO()
            scipy.io.mmwrite(buf, obj if name == "matrix.mtx" else np.asarray(obj))
            out[name] = buf.getvalue().decode()
    if args.import_rule:
        rule = import_rule(args.import_rule)
        F = problem.integrand()
        if isinstance(rule, LatticeRule):
            if rule.R < 2 and config.R > 1:
                rule = rule.with_shifts(config.R, config.seed)
            est = estimate_with_rule(F, "lattice-pod", rule.N, rule.s, rule.R, config.seed,
                                     lattice=rule, config=config)
        else:
            est = estimate_with_rule(F, "interlaced-spod", rule.N, rule.s, 1, config.seed,
                                     lattice=rule, config=config)
    else:
        est = estimate(config, problem)
    rows = [[config.rule, est.N, est.R, format_complex(est.mean), float(est.rmse)]]
    out["solve.csv"] = _table(config, ["rule", "N", "R", "mean", "rmse"], rows)
    return out


def cmd_fem(config: RunConfig, args) -> dict[str, str]:
    cfg = config
    if cfg.data != "manufactured":
        cfg = apply_overrides(config, ["data=\"manufactured\""])
    res = fem_study(cfg)
    return {"fem_vnorm.csv": study_csv(res, cfg),
            "fem_functional.csv": study_csv(res.extra["functional"], cfg)}


def cmd_trunc(config: RunConfig, args) -> dict[str, str]:
    return {"trunc_study.csv": study_csv(truncation_study(config), config)}


def cmd_qmc(config: RunConfig, args) -> dict[str, str]:
    return {f"qmc_{config.rule}.csv": study_csv(qmc_rate_study(config), config)}


def cmd_cbc(config: RunConfig, args) -> dict[str, str]:
    if config.integrand == "product":
        ups = product_upsilon(config.s)
    else:
        ups = Problem(config).upsilon(config.s)
    out = {}
    if config.rule == "interlaced-spod":
        weights = spod_weights(ups, interlacing_factor(config.p1))
        m = int(round(math.log2(max(config.N, 16))))
        rule = cbc_poly_lattice(m, config.s, weights)
        rows = [["interlaced-spod", rule.N, rule.s, rule.alpha, math.nan, math.nan]]
    else:
        weights = pod_weights(ups, config.p1, config.delta)
        rule = build_lattice(config.N, config.s, ups, config)
        rows = [["lattice-pod", rule.N, rule.s, 1, worst_case_error(rule, weights),
                 weights.error_bound(rule.N)]]
    out["cbc.csv"] = _table(config, ["rule", "N", "s", "alpha", "worst_case_error",
                                     "error_bound"], rows)
    out["weights.csv"] = export_weights_csv(weights, max_order=min(config.s, 3))
    out[args.export_rule or "rule.txt"] = format_rule(rule)
    return out


def cmd_regularity(config: RunConfig, args) -> dict[str, str]:
    problem = Problem(config)
    gram = assemble_vnorm_gram(problem.space, config.k)
    dims = min(config.dims, config.s)
    rng = np.random.default_rng(config.seed)
    rows = []
    for t in range(config.n_y):
        y = rng.random(config.s) - 0.5
        ctx = DerivativeContext(problem.space, problem.field, y, config.k, problem.params)
        for nu in multi_indices(config.max_order, dims):
            cert = regularity_certificate(nu, problem.constants, ctx, gram)
            rows.append([t, ",".join(map(str, nu.dense(dims))), cert.lhs, cert.bound,
                         cert.ratio, cert.passed])
    return {"regularity.csv": _table(config, ["y_index", "nu", "lhs", "bound", "ratio", "pass"],
                                     rows)}


COMMANDS = {
    "constants": cmd_constants,
    "check-field": cmd_check_field,
    "solve": cmd_solve,
    "fem-convergence": cmd_fem,
    "trunc-study": cmd_trunc,
    "qmc-convergence": cmd_qmc,
    "cbc-construct": cmd_cbc,
    "regularity-check": cmd_regularity,
}


def build_parser() -> argparse.ArgumentParser:
    defaults = json.dumps(RunConfig().to_dict(), sort_keys=True)
    ap = argparse.ArgumentParser(
        prog="helmholtz-qmc",
        description="QMC and spline Galerkin estimation of Helmholtz quantities of interest.",
        epilog=f"Config defaults: {defaults}",
    )
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("-c", "--config", help="JSON run configuration (defaults if omitted)")
    ap.add_argument("-o", "--out", help="output directory (default: config 'output')")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry, nested keys with dots (repeatable)")
    ap.add_argument("--dump-system", action="store_true",
                    help="solve: also write the y=0 matrix and load vector in Matrix Market format")
    ap.add_argument("--export-rule", metavar="PATH", help="cbc-construct: rule file to write")
    ap.add_argument("--import-rule", metavar="PATH", help="solve: use this rule file")
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        config = parse_config(args.config) if args.config else config_from_dict({})
        if args.overrides:
            config = apply_overrides(config, args.overrides)
        outputs = COMMANDS[args.subcommand](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionViolation as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvalidArgument as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.out or config.output)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, text in outputs.items():
        path = Path(name) if Path(name).is_absolute() else outdir / name
        path.write_text(text)
        print(path)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
