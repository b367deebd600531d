"""Command-line front end.

Every run is determined by its arguments.  Structured (JSON) documents carry
the tool version, an echo of the configuration and the dataset digest, and are
written with sorted keys so identical invocations give identical bytes.

Exit codes: 0 success, 2 bad arguments, 3 unreadable or malformed input,
4 dimension mismatch, 5 a self-check failed, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, fixtures
from .dataset import DataError, Dataset, read_counts, read_samples, with_overrides
from .dynamics import TransitionModel, b_oracle, exact_dataset, sample_dataset
from .hypercube import MAX_DIMENSION, free_var_counts, label
from .likelihood import free_a_variables, likelihood_exact, loglik
from .polyalg import PolynomialParseError, UnboundVariableError, VarId
from .solver import solve_fiber, solve_mle, solve_residual
from .sysgen import (
    FULL,
    REDUCED,
    build_system,
    naive_dynamics,
    reduce,
    residuals,
    system_shape,
    to_document,
    to_text,
    verify_syzygies,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_DIMENSION = 4
EXIT_CHECK = 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class DimensionError(CliError):
    def __init__(self, message: str):
        super().__init__(message, EXIT_DIMENSION)


# -- inputs ------------------------------------------------------------------


def _load_dataset(args) -> Dataset:
    sources = [s for s in (args.data, args.counts, args.fixture) if s is not None]
    if len(sources) != 1:
        raise CliError("give exactly one of --data, --counts, --fixture", EXIT_USAGE)
    try:
        if args.data is not None:
            d = read_samples(args.data)
        elif args.counts is not None:
            d = read_counts(args.counts)
        else:
            d = {
                "toy": fixtures.toy_dataset,
                "counterexample": fixtures.counterexample_dataset,
                "ovarian": fixtures.ovarian_dataset,
            }[args.fixture]()
        if args.d0 is not None or args.dfull is not None:
            d = with_overrides(d, args.d0, args.dfull)
    except OSError as exc:
        raise CliError(f"cannot read input: {exc}", EXIT_INPUT) from None
    except DataError as exc:
        raise CliError(f"bad dataset: {exc}", EXIT_INPUT) from None
    if args.L is not None and args.L != d.L:
        raise DimensionError(f"dataset has L={d.L} but --L {args.L} was given")
    return d


def _number(text) -> float | Fraction:
    if isinstance(text, bool):
        raise ValueError("boolean is not a number")
    if isinstance(text, (int, float)):
        return text
    return Fraction(str(text))


def _read_values(path: str | None, column: str | None, L: int) -> dict[VarId, float | Fraction]:
    """Variable values from a JSON mapping (optionally under ``"point"``) or a
    bundled table column.  Names belonging to another dimension are rejected."""
    if (path is None) == (column is None):
        raise CliError("give exactly one of a values file or --table-column", EXIT_USAGE)
    if column is not None:
        values: dict = dict(fixtures.ovarian_table_columns()[column])
    else:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError(f"cannot read input: {exc}", EXIT_INPUT) from None
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: invalid JSON: {exc}", EXIT_INPUT) from None
        if isinstance(raw, dict) and isinstance(raw.get("point"), dict):
            raw = raw["point"]
        if not isinstance(raw, dict):
            raise CliError(f"{path}: expected an object of variable values", EXIT_INPUT)
        values = {}
        for name, val in raw.items():
            try:
                values[VarId.from_name(name)] = _number(val)
            except (ValueError, ZeroDivisionError) as exc:
                raise CliError(f"{path}: bad entry {name!r}: {exc}", EXIT_INPUT) from None
    for v in values:
        if v.L != L:
            raise DimensionError(f"variable {v.name} does not belong to dimension L={L}")
    return values


def _free_a_model(L: int, values: dict) -> TransitionModel:
    missing = [v.name for v in free_a_variables(L) if v not in values]
    if missing:
        raise CliError(f"missing a-values: {', '.join(missing)}", EXIT_INPUT)
    try:
        return TransitionModel.from_free(L, values, clip=True)
    except ValueError as exc:
        raise CliError(f"invalid a-values: {exc}", EXIT_INPUT) from None


# -- output ------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if x is None:
        return "undefined"
    return repr(float(x))


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _document(args, digest: str | None, result) -> str:
    doc = {
        "tool": "accumalg",
        "version": __version__,
        "config": _config(args),
        "dataset_digest": digest,
        "result": result,
    }
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def _emit(args, text: str, doc: str) -> None:
    body = doc if args.format == "json" else text
    if args.out:
        Path(args.out).write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(body)


# -- subcommands -------------------------------------------------------------


def cmd_generate(args) -> int:
    d = _load_dataset(args)
    system = build_system(d, args.mode)
    text = to_text(system)
    doc = _document(args, d.digest(), to_document(system))
    if args.out:
        out = Path(args.out)
        if out.suffix == ".json":
            raise CliError("--out names the text file; the JSON document is written beside it", EXIT_USAGE)
        out.write_text(text, encoding="utf-8")
        out.with_suffix(".json").write_text(doc, encoding="utf-8")
        sys.stdout.write(f"wrote {len(system.generators)} generators to {out} and {out.with_suffix('.json')}\n")
    else:
        sys.stdout.write(doc if args.format == "json" else text)
    return EXIT_OK


def cmd_residuals(args) -> int:
    d = _load_dataset(args)
    system = build_system(d, args.mode)
    values = _read_values(args.point, args.table_column, d.L)
    exact = all(isinstance(v, (int, Fraction)) for v in values.values())
    point = {v: values[v] for v in system.variables if v in values}
    missing = [v.name for v in system.variables if v not in values]
    if missing:
        raise CliError(f"point misses free variables: {', '.join(missing)}", EXIT_INPUT)
    try:
        res = residuals(system, point, exact=exact)
    except UnboundVariableError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    maxabs = max((abs(r) for r in res), default=0)
    rows = [(system.label_text(k), r) for k, r in enumerate(res)]
    lines = [f"{lab}\t{_fmt(r)}" for lab, r in rows]
    lines.append(f"max_abs\t{_fmt(maxabs)}")
    result = {
        "exact": exact,
        "residuals": [{"label": lab, "value": r} for lab, r in rows],
        "max_abs": maxabs,
        "ignored": sorted(v.name for v in values if v not in point),
    }
    _emit(args, "\n".join(lines) + "\n", _document(args, d.digest(), result))
    return EXIT_OK


def _results_text(results, system) -> str:
    lines = []
    for r in results:
        lines.append(
            f"start {r.start_index}: objective {r.objective!r} converged {r.converged} iterations {r.iterations}"
        )
        for v in system.variables:
            lines.append(f"  {v.name}\t{r.point[v]!r}")
    return "\n".join(lines) + "\n"


def _require_reduced(args) -> None:
    if args.mode != REDUCED:
        raise CliError("the solver works on the reduced system only", EXIT_USAGE)


def cmd_solve(args) -> int:
    _require_reduced(args)
    d = _load_dataset(args)
    system = build_system(d, args.mode)
    results = solve_residual(system, starts=args.starts, seed=args.seed, tol=args.tol, maxiter=args.maxiter)
    doc = _document(args, d.digest(), {"results": [r.to_document() for r in results]})
    _emit(args, _results_text(results, system), doc)
    return EXIT_OK


def cmd_fiber(args) -> int:
    _require_reduced(args)
    d = _load_dataset(args)
    system = build_system(d, args.mode)
    values = _read_values(args.a_values, args.table_column, d.L)
    try:
        results = solve_fiber(system, values, starts=args.starts, seed=args.seed, tol=args.tol, maxiter=args.maxiter)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    doc = _document(args, d.digest(), {"results": [r.to_document() for r in results]})
    _emit(args, _results_text(results, system), doc)
    return EXIT_OK


def cmd_mle(args) -> int:
    _require_reduced(args)
    d = _load_dataset(args)
    system = build_system(d, args.mode)
    r = solve_mle(system, d, starts=args.starts, seed=args.seed, maxiter=args.maxiter)
    result = r.to_document()
    result["likelihood_report"] = r.loglik.to_document()
    text = _results_text([r], system) + f"loglik {r.loglik.loglik!r}\n"
    _emit(args, text, _document(args, d.digest(), result))
    return EXIT_OK


def cmd_loglik(args) -> int:
    d = _load_dataset(args)
    values = _read_values(args.a_values, args.table_column, d.L)
    m = _free_a_model(d.L, values)
    report = loglik(m, d)
    result = report.to_document()
    if all(isinstance(v, (int, Fraction)) for v in m.a.values()):
        result["likelihood_exact"] = likelihood_exact(m, d)
    lines = [f"{label(s, d.L)}\tD={t.count}\tR={t.reach!r}" for s, t in sorted(report.per_state_terms.items()) if t.count]
    summary = f"loglik {report.loglik:.6f}"
    if report.zero_reach_states:
        summary += " (zero reach at " + ", ".join(label(s, d.L) for s in report.zero_reach_states) + ")"
    if args.format == "json" and not args.out:
        sys.stderr.write(summary + "\n")
    _emit(args, "\n".join(lines + [summary]) + "\n", _document(args, d.digest(), result))
    return EXIT_OK


def _parse_q(text: str | None, L: int) -> list[Fraction] | None:
    if text is None:
        return None
    try:
        q = [Fraction(x) for x in text.split(",")]
    except ValueError as exc:
        raise CliError(f"bad --q: {exc}", EXIT_USAGE) from None
    if len(q) != L + 1:
        raise DimensionError(f"--q needs {L + 1} weights for L={L}")
    if any(w < 0 for w in q) or sum(q) != 1:
        raise CliError("--q weights must be non-negative and sum to 1", EXIT_USAGE)
    return q


def cmd_simulate(args) -> int:
    if args.L is None:
        raise CliError("simulate needs --L", EXIT_USAGE)
    L = args.L
    if args.a_values is not None:
        m = _free_a_model(L, _read_values(args.a_values, None, L))
    else:
        m = TransitionModel.random(L, np.random.default_rng(args.seed))
    q = _parse_q(args.q, L)
    d = sample_dataset(m, args.n, args.seed, q)
    samples = "".join(ln + "\n" for ln in d.to_lines())
    oracle = b_oracle(m)
    sidecar = {
        "L": L,
        "n": args.n,
        "level_distribution": [str(w) for w in (q or [Fraction(1, L + 1)] * (L + 1))],
        "a": {VarId("a", e.src, e.dst, L).name: m.a[e] for e in sorted(m.a)},
        "b": {VarId("b", e.src, e.dst, L).name: oracle[e] for e in sorted(oracle)},
        "exact_proportions": {label(s, L): p for s, p in enumerate(exact_dataset(m, q))},
        "counts": {label(s, L): c for s, c in enumerate(d.counts)},
    }
    doc = _document(args, d.digest(), sidecar)
    if args.out:
        out = Path(args.out)
        if out.suffix == ".json":
            raise CliError("--out names the sample file; the JSON sidecar is written beside it", EXIT_USAGE)
        out.write_text(samples, encoding="utf-8")
        out.with_suffix(".json").write_text(doc, encoding="utf-8")
        sys.stdout.write(f"wrote {args.n} samples to {out} and {out.with_suffix('.json')}\n")
    else:
        sys.stdout.write(doc if args.format == "json" else samples)
    return EXIT_OK


# -- built-in fixture suite -----------------------------------------------------


def _check_counts() -> tuple[bool, str]:
    ok = free_var_counts(3) == (5, 5, 9) and free_var_counts(4) == (17, 17, 28)
    for L, want in ((3, (10, 9)), (4, (34, 28))):
        variables, labels = system_shape(L, REDUCED)
        ok &= (len(variables), len(labels)) == want
    toy = build_system(fixtures.toy_dataset())
    ok &= (len(toy.variables), len(toy.generators)) == (10, 9)
    return ok, "L=3: 10 variables / 9 generators; L=4: 34 / 28"


def _check_syzygies() -> tuple[bool, str]:
    sets = [fixtures.toy_dataset(), fixtures.counterexample_dataset()]
    ok = all(verify_syzygies(build_system(d, FULL)) for d in sets)
    return ok, f"{len(sets)} datasets"


def _component_points(n_draws: int = 20, seed: int = 0):
    rng = np.random.default_rng(seed)
    for comp in fixtures.toy_components():
        for _ in range(n_draws):
            params = {p: Fraction(int(rng.integers(0, 1001)), 1000) for p in ("t", "s", "u")}
            yield comp, comp.point(params)


def _check_components() -> tuple[bool, str]:
    system = build_system(fixtures.toy_dataset())
    full = build_system(fixtures.toy_dataset(), FULL)
    reduced = reduce(full)
    ok = reduced.generators == system.generators
    count = 0
    for _, point in _component_points():
        ok &= all(r == 0 for r in residuals(system, point, exact=True))
        count += 1
    return ok, f"{count} component points, all generators exactly zero"


def _check_groebner() -> tuple[bool, str]:
    basis = fixtures.groebner_basis()
    ok = len(basis) == 11
    for _, point in _component_points():
        ok &= all(g.eval(point, exact=True) == 0 for g in basis)
    return ok, f"{len(basis)} basis polynomials vanish on all component points"


def _check_likelihood() -> tuple[bool, str]:
    d = fixtures.toy_dataset()
    ok = True
    for comp in fixtures.toy_components():
        point = comp.point({"t": Fraction(1, 2), "s": Fraction(1, 2), "u": Fraction(1, 2)})
        m = TransitionModel.from_free(3, point)
        ok &= likelihood_exact(m, d) == comp.likelihood
    ov = fixtures.ovarian_dataset()
    worst = 0.0
    for col, p in fixtures.ovarian_table_columns().items():
        ll = loglik(TransitionModel.from_free(4, p, clip=True), ov).loglik
        worst = max(worst, abs(ll - fixtures.OVARIAN_REPORTED_LOGLIK[col]))
    ok &= worst <= 0.02
    return ok, f"toy likelihoods exact; ovarian max |delta loglik| {worst:.4f}"


def _check_counterexample() -> tuple[bool, str]:
    d = fixtures.counterexample_dataset()
    naive = dict(naive_dynamics(d))
    g = naive[0b011]
    ok = g.is_constant() and g.constant_term() == Fraction(-2, 5)
    return ok, f"naive dynamics residual at 011 is {g.to_text()}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "counts": _check_counts,
    "syzygies": _check_syzygies,
    "components": _check_components,
    "groebner": _check_groebner,
    "likelihood": _check_likelihood,
    "counterexample": _check_counterexample,
}


def cmd_check(args) -> int:
    rows = []
    for name, fn in CHECKS.items():
        ok, detail = fn()
        rows.append({"group": name, "passed": bool(ok), "detail": detail})
    width = max(len(r["group"]) for r in rows)
    lines = [f"{r['group']:<{width}}  {'PASS' if r['passed'] else 'FAIL'}  {r['detail']}" for r in rows]
    passed = all(r["passed"] for r in rows)
    lines.append(f"{sum(r['passed'] for r in rows)}/{len(rows)} groups passed")
    _emit(args, "\n".join(lines) + "\n", _document(args, None, {"groups": rows, "passed": passed}))
    return EXIT_OK if passed else EXIT_CHECK


# -- argument parsing -------------------------------------------------------------


def _dimension(text: str) -> int:
    L = int(text)
    if not 1 <= L <= MAX_DIMENSION:
        raise argparse.ArgumentTypeError(f"L must be in [1, {MAX_DIMENSION}]")
    return L


def _positive_int(text: str) -> int:
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return k


def _nonneg_int(text: str) -> int:
    k = int(text)
    if k < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return k


def _positive_float(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="accumalg", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"accumalg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", help="output path (default: standard output)")

    data = argparse.ArgumentParser(add_help=False)
    src = data.add_argument_group("dataset")
    src.add_argument("--data", help="sample file, one binary string per line")
    src.add_argument("--counts", help="CSV file with header state,count")
    src.add_argument("--fixture", choices=("toy", "counterexample", "ovarian"), help="bundled dataset")
    src.add_argument("--d0", type=_nonneg_int, help="override the count of the empty state")
    src.add_argument("--dfull", type=_nonneg_int, help="override the count of the full state")
    src.add_argument("--L", type=_dimension, help="expected dimension")
    src.add_argument("--mode", choices=(REDUCED, FULL), default=REDUCED)

    def search(starts: int) -> argparse.ArgumentParser:
        # built per subcommand: parent actions are shared objects
        group = argparse.ArgumentParser(add_help=False)
        group.add_argument("--starts", type=_positive_int, default=starts)
        group.add_argument("--seed", type=_nonneg_int, default=0)
        group.add_argument("--tol", type=_positive_float, default=1e-10)
        group.add_argument("--maxiter", type=_positive_int, default=5000)
        return group

    column = argparse.ArgumentParser(add_help=False)
    column.add_argument("--table-column", choices=fixtures.TABLE_COLUMNS, help="bundled ovarian parameter column")

    p = sub.add_parser("generate", parents=[common, data], help="emit the generator system")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("residuals", parents=[common, data, column], help="evaluate generators at a point")
    p.add_argument("--point", help="JSON object mapping variable names to values")
    p.set_defaults(func=cmd_residuals)

    p = sub.add_parser("solve", parents=[common, data, search(20)], help="minimize the sum of squared generators")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fiber", parents=[common, data, search(1), column], help="solve for b with a fixed")
    p.add_argument("--a-values", help="JSON object with the free a-variables")
    p.set_defaults(func=cmd_fiber)

    p = sub.add_parser("mle", parents=[common, data, search(5)], help="maximize the likelihood on the solution set")
    p.set_defaults(func=cmd_mle)

    p = sub.add_parser("loglik", parents=[common, data, column], help="log-likelihood at given a-values")
    p.add_argument("--a-values", help="JSON object with the free a-variables")
    p.set_defaults(func=cmd_loglik)

    p = sub.add_parser("simulate", parents=[common], help="sample a synthetic dataset")
    p.add_argument("--L", type=_dimension)
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--q", help="comma-separated level weights, e.g. 1/4,1/4,1/4,1/4")
    p.add_argument("--a-values", help="JSON object with the free a-variables (default: random model)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", parents=[common], help="run the bundled fixture suite")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"accumalg: error: {exc}\n")
        return exc.code
    except (DataError, PolynomialParseError) as exc:
        sys.stderr.write(f"accumalg: error: {exc}\n")
        return EXIT_INPUT
    except OSError as exc:
        sys.stderr.write(f"accumalg: error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
