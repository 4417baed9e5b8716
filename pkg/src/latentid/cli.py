"""Command-line interface: ``latentid <command> ...``.

Exit status 0 means success; every failure cause has its own code (see
``latentid --help``).
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import errors
from .assign import assign_discrete3, assign_group_mean
from .fileio import (
    format_number,
    load_spec,
    model_to_text,
    pmf3_from_table,
    pmf3_to_csv,
    population_csv,
    population_to_csv,
    read_model,
    read_population,
)
from .kotlarski import DEFAULT_N_POINTS, DEFAULT_T_MAX, DEFAULT_VANISH_TOL, GridSpec, Sample2, invert_cf, latent_cf
from .population import check_leaves
from .spectral3 import FIT_TOL, RANK_TOL, SEP_TOL, identify, search_g
from .synth import TwoMeasSpec, gaussian_sample, gen_three_meas, gen_two_meas, random_spec

EXIT_CODES = {
    "leaves fail (check-leaves) / models differ (compare)": 1,
    **{cls.__name__: cls.exit_code for cls in (
        errors.ParseError, errors.RankDeficient, errors.EigenvalueCollision,
        errors.ModeAmbiguity, errors.NotAProbability, errors.AmbiguousAssignment,
        errors.VanishingCF, errors.GridTooCoarse, errors.ComplexEigenvalues,
        errors.NoFactorization, errors.LeavesViolation, errors.ModelMisfit,
        errors.SingularDesign, errors.GenerationExhausted, errors.BadDistribution,
    )},
}


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LATENTID_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise errors.ParseError(f"LATENTID_SEED={env!r} is not an integer") from None


def _emit(text: str, output) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8", newline="\n")


def _parse_g(spec: str, pmf, seed: int):
    if spec == "identity":
        return None
    if spec == "auto":
        return search_g(pmf, seed=seed)
    try:
        g = np.array([float(v) for v in spec.split(",")])
    except ValueError:
        raise errors.ParseError(f"--g must be 'identity', 'auto' or comma-separated numbers, got {spec!r}") from None
    if g.shape[0] != pmf.L:
        raise errors.ParseError(f"--g has {g.shape[0]} values but X3 takes {pmf.L}")
    return g


def cmd_check_leaves(args) -> int:
    table = read_population(args.input)
    pop = table.population()
    report = check_leaves(pop)
    print(f"records: {pop.n}")
    print(f"holds: {'true' if report.holds else 'false'}")
    print(f"collisions: {len(report.collisions)}")
    for i, j in report.collisions:
        x = ",".join(format_number(v) for v in pop.records[i].x)
        print(f"  rows {i + 1} and {j + 1}: ({x})")
    return 0 if report.holds else 1


def _identify(args, pmf):
    g = _parse_g(args.g, pmf, _seed(args))
    return identify(pmf, g=g, rank_tol=args.rank_tol, sep_tol=args.sep_tol, fit_tol=args.fit_tol)


def cmd_identify3(args) -> int:
    pmf = pmf3_from_table(read_population(args.input))
    result = _identify(args, pmf)
    dec, fit = result.decomposition, result.fit
    print(f"K: {pmf.K}  L: {pmf.L}")
    print(f"g: {' '.join(format_number(v) for v in result.g)}")
    print(f"eigenvalues: {' '.join(format_number(v) for v in dec.eigenvalues)}")
    print(f"min singular value of M: {dec.min_singular_value:.6g}")
    print(f"condition number of M: {dec.condition_number:.6g}")
    print(f"condition number of f(X1|X*): {dec.eigvec_condition:.6g}")
    print(f"clamped mass: {result.model.max_clamp:.3g}")
    print(f"fit max abs error: {fit.max_abs_err:.3g} ({'ok' if fit.ok else 'FAILED'})")
    if args.output:
        _emit(model_to_text(result.model), args.output)
    else:
        sys.stdout.write(model_to_text(result.model))
    if not fit.ok:
        print("error: conditional independence fails; model does not reproduce the pmf", file=sys.stderr)
        return errors.ModelMisfit.exit_code
    return 0


def cmd_assign(args) -> int:
    table = read_population(args.input)
    pop = table.population()
    columns = [c for c in table.columns if c != "x_star"]
    if args.mode == "group-mean":
        if not args.model:
            raise errors.ParseError("group-mean mode needs --model with a two_meas spec file")
        _, kind, spec = load_spec(args.model)
        if kind != "two_meas" or not isinstance(spec, TwoMeasSpec):
            raise errors.ParseError("group-mean mode needs a two_meas spec")
        amap = assign_group_mean(pop, spec.eps1, spec.joint_latent_eps2())
        extra = ["x_star", "posterior", "group"]
    else:
        pmf = pmf3_from_table(table)
        if args.model:
            model = read_model(args.model)
        else:
            model = _identify(args, pmf).model
        try:
            amap = assign_discrete3(pmf, model, pop, fit_tol=args.fit_tol)
        except errors.AmbiguousAssignment as exc:
            print("ambiguous observed tuples:", file=sys.stderr)
            for x in exc.tuples:
                print("  (" + ",".join(format_number(v) for v in x) + ")", file=sys.stderr)
            raise
        extra = ["x_star", "posterior"]
    rows = []
    for row, x in zip(table.rows, table.observed()):
        a = amap[x]
        out = [row[c] for c in columns] + [a.x_star, a.posterior]
        if "group" in extra:
            out.append(a.group)
        rows.append(out)
    _emit(population_csv(columns + extra, rows), args.output)
    return 0


def cmd_kotlarski(args) -> int:
    table = read_population(args.input)
    if table.obs_columns != ["x1", "x2"]:
        raise errors.ParseError("kotlarski needs a file with columns x1, x2 (and optional p)")
    sample = Sample2([[float(v) for v in x] for x in table.observed()],
                     [float(p) for p in table.probabilities()])
    grid = GridSpec(args.t_max, args.n_points)
    result = latent_cf(sample, grid, vanish_tol=args.vanish_tol)
    xs = np.linspace(args.x_min, args.x_max, args.x_points)
    inv = invert_cf(result.phi_latent, xs)
    rows = [[float(x), float(f)] for x, f in zip(inv.x, inv.density)]
    print(f"grid: |t| <= {format_number(grid.t_max)}, {grid.n_points} points", file=sys.stderr)
    print(f"min |phi_X1|: {result.min_abs_phi_x1:.6g}", file=sys.stderr)
    print(f"inversion window: |t| <= {format_number(inv.t_max)} (truncation bias not corrected)",
          file=sys.stderr)
    _emit(population_csv(["x", "density"], rows), args.output)
    return 0


def cmd_synth(args) -> int:
    name, kind, spec = load_spec(args.spec)
    seed = _seed(args)
    out = Path(args.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", errors.LeavesViolationWarning)
        if kind == "two_meas":
            pop = gen_two_meas(spec)
            written.append(_write(out / f"{name}_population.csv", population_to_csv(pop)))
        elif kind == "random2":
            pop = gen_two_meas(random_spec(seed, spec["K"], spec["L"], kind="two"))
            written.append(_write(out / f"{name}_population.csv", population_to_csv(pop)))
        elif kind in ("three_meas", "random3"):
            if kind == "random3":
                spec = random_spec(seed, spec["K"], spec["L"])
            pmf, pop = gen_three_meas(spec)
            written.append(_write(out / f"{name}_population.csv", population_to_csv(pop)))
            written.append(_write(out / f"{name}_pmf.csv", pmf3_to_csv(pmf)))
            written.append(_write(out / f"{name}_model.txt", model_to_text(spec.to_model())))
        elif kind == "gaussian2":
            sample = gaussian_sample(**spec)
            rows = [[x1, x2, p] for (x1, x2), p in zip(sample.points, sample.weights)]
            written.append(_write(out / f"{name}_sample.csv", population_csv(["x1", "x2", "p"], rows)))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    for path in written:
        print(path)
    return 0


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def cmd_compare(args) -> int:
    a, b = read_model(args.first), read_model(args.second)
    diff = a.max_abs_diff(b)
    print(f"max abs difference: {diff:.3g}")
    return 0 if diff <= args.tol else 1


def build_parser() -> argparse.ArgumentParser:
    codes = "\n".join(f"  {code:>2}  {name}" for name, code in sorted(EXIT_CODES.items(), key=lambda kv: kv[1]))
    parser = argparse.ArgumentParser(
        prog="latentid",
        description="Identify latent values in observations of a finite population.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="exit codes:\n   0  success\n" + codes,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    def common_spectral(p):
        p.add_argument("--g", default="identity",
                       help="g over the X3 support: 'identity', comma-separated values, or 'auto' (experimental random search)")
        p.add_argument("--rank-tol", type=float, default=RANK_TOL)
        p.add_argument("--sep-tol", type=float, default=SEP_TOL)
        p.add_argument("--fit-tol", type=float, default=FIT_TOL)
        p.add_argument("--seed", type=int, default=None, help="random seed (fallback: $LATENTID_SEED, then 0)")

    p = sub.add_parser("check-leaves", help="check that observed tuples are pairwise distinct", formatter_class=fmt)
    p.add_argument("input")
    p.set_defaults(func=cmd_check_leaves)

    p = sub.add_parser("identify3", help="identify the three-measurement components", formatter_class=fmt)
    p.add_argument("input", help="CSV with columns x1,x2,x3,p")
    p.add_argument("--output", help="model file to write (default: stdout)")
    common_spectral(p)
    p.set_defaults(func=cmd_identify3)

    p = sub.add_parser("assign", help="assign the latent value to every observation", formatter_class=fmt)
    p.add_argument("input")
    p.add_argument("--model", help="model file (posterior mode) or two_meas spec (group-mean mode); "
                                   "omitted in posterior mode: identify from the input")
    p.add_argument("--mode", choices=("posterior", "group-mean"), default="posterior")
    p.add_argument("--output", help="CSV to write (default: stdout)")
    common_spectral(p)
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("kotlarski", help="latent density from two additive measurements", formatter_class=fmt)
    p.add_argument("input", help="CSV with columns x1,x2[,p]")
    p.add_argument("--t-max", type=float, default=DEFAULT_T_MAX)
    p.add_argument("--n-points", type=int, default=DEFAULT_N_POINTS)
    p.add_argument("--vanish-tol", type=float, default=DEFAULT_VANISH_TOL)
    p.add_argument("--x-min", type=float, default=-5.0)
    p.add_argument("--x-max", type=float, default=5.0)
    p.add_argument("--x-points", type=int, default=201)
    p.add_argument("--output", help="CSV to write (default: stdout)")
    p.set_defaults(func=cmd_kotlarski)

    p = sub.add_parser("synth", help="generate populations from a spec file or shipped spec name", formatter_class=fmt)
    p.add_argument("spec", help="JSON spec path or one of: table1, table1b, table2, table3, gaussian, random3")
    p.add_argument("--seed", type=int, default=None, help="seed for random specs (fallback: $LATENTID_SEED, then 0)")
    p.add_argument("--output", help="output directory", default=".")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compare", help="compare two model files", formatter_class=fmt)
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n_points", 1) % 2 == 0:
        parser.error("--n-points must be odd")
    try:
        return args.func(args)
    except errors.LatentIdError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return errors.ParseError.exit_code


if __name__ == "__main__":
    sys.exit(main())
