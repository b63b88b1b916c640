"""Command-line front end: norm, certify, atlas, check, selftest.

Exit codes: 0 success (converged / pass), 2 unconverged or failed check,
1 usage or input error.  Reports are JSON with sorted keys and carry the
numeric configuration, so identical arguments and seed give identical bytes.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from opideal.config import RunConfig
from opideal.spaces import INF, InvalidExponentError, SpaceSpec, as_exponent, exponent_to_json

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_UNCONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# input parsing


def load_operator(spec: str):
    """An operator from a JSON file path or an inline JSON string.

    Accepted shapes: {"entries", "domain", "codomain"} as written by the
    library, or the short form {"entries", "u", "v"}.
    """
    from opideal.summing import OperatorMatrix

    text = spec
    path = Path(spec)
    if not spec.lstrip().startswith("{") and path.exists():
        text = path.read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"cannot parse operator: {exc}") from None
    try:
        if "domain" in d:
            return OperatorMatrix.from_dict(d)
        return OperatorMatrix.from_array(d["entries"], d.get("u", 2), d.get("v", 2))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed operator: {exc}") from None


def parse_dims(text: str) -> tuple[int, int]:
    """'3x4' -> (3, 4); '2..4' -> (2, 4); '3' -> (3, 3)."""
    try:
        if "x" in text:
            a, b = text.split("x")
        elif ".." in text:
            a, b = text.split("..")
        else:
            a = b = text
        lo, hi = int(a), int(b)
    except ValueError:
        raise UsageError(f"bad dimension spec {text!r}") from None
    if lo < 1 or hi < 1:
        raise UsageError("dimensions must be positive")
    return lo, hi


def parse_range(text: str) -> list[int]:
    lo, hi = parse_dims(text if ".." in text else f"{text}..{text}")
    if hi < lo:
        raise UsageError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


def _exponent(text):
    try:
        return as_exponent(text)
    except InvalidExponentError as exc:
        raise UsageError(str(exc)) from None


def make_config(args) -> RunConfig:
    kw = {}
    for name in ("seed", "gap_rel", "restarts", "max_iter", "engine_rounds", "kappa_rounds",
                 "max_atoms", "functional_budget", "rank_budget", "nuclear_rounds", "feas"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    kw["output"] = getattr(args, "output", None)
    kw["format"] = getattr(args, "format", "json") or "json"
    try:
        return RunConfig.from_env(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    """JSON-safe copy: inf becomes "inf", numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def header(command: str, config: RunConfig) -> dict:
    return {"schema": SCHEMA, "command": command, "config": config.numeric()}


def emit(report, config: RunConfig, text: str | None = None) -> None:
    """Write the report (or preformatted text) to the configured output or stdout."""
    if text is None:
        text = json.dumps(_clean(report), sort_keys=True, indent=1) + "\n"
    if config.output:
        Path(config.output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


NORM_KINDS = ("kappa", "pi", "nu_p", "nu^p", "qn", "op")


def compute_norm(kind: str, T, p: float, config: RunConfig):
    from opideal.kompact import _certificate, kappa_norm
    from opideal.nuclear import nuclear_dp, nuclear_gp
    from opideal.summing import _combine, _run_with_rounds, operator_norm, summing_norm

    if kind == "op":
        return operator_norm(T, config)
    if kind == "kappa":
        return kappa_norm(T, p, config)
    if kind == "pi":
        return summing_norm(T, p, config)
    if kind in ("nu_p", "nu^p"):
        if math.isinf(p):
            raise UsageError("nuclear norms need a finite p")
        f = nuclear_gp if kind == "nu_p" else nuclear_dp
        return f(T, p, config.rank_budget, config.seed, config)
    if kind == "qn":
        if math.isinf(p) or T.is_zero():
            return summing_norm(T, p, config)
        search = _run_with_rounds(T, p, config)
        est = _combine(T, p, search, config)
        cert = _certificate(search, config.functional_budget, config)
        est.upper = max(cert.cost, est.lower) if cert.truncated else min(est.upper, cert.cost)
        est.upper_witness = cert.to_dict()
        est.method = "quasi_nuclear"
        return est
    raise UsageError(f"unknown norm kind {kind!r}")


def _norm_report(command, kind, T, p, config):
    est = compute_norm(kind, T, p, config)
    rep = header(command, config)
    rep.update({"kind": kind, "p": exponent_to_json(p), "operator": T.to_dict(),
                "estimate": est.to_dict(), "rel_gap": est.rel_gap})
    return rep, est


def cmd_norm(args) -> int:
    config = make_config(args)
    T = load_operator(args.op)
    p = _exponent(args.p) if args.kind != "op" else INF
    rep, est = _norm_report("norm", args.kind, T, p, config)
    emit(rep, config)
    return EXIT_OK if est.converged else EXIT_UNCONVERGED


def cmd_certify(args) -> int:
    config = make_config(args)
    T = load_operator(args.op)
    p = _exponent(args.p)
    rep, est = _norm_report("certify", "kappa", T, p, config)
    ok = est.rel_gap <= config.gap_rel and est.converged
    rep["verdict"] = "certified" if ok else "gap open"
    emit(rep, config)
    return EXIT_OK if ok else EXIT_UNCONVERGED


DEFAULT_GRID = tuple(itertools.product((1.0, 2.0, 4.0), (1.0, 2.0, INF), (1.0, 2.0, INF)))


def cmd_atlas(args) -> int:
    from opideal.atlas import LimitOrderQuery, atlas, rows_to_csv, rows_to_json

    config = make_config(args)
    if args.grid == "default":
        grid = list(DEFAULT_GRID)
    else:
        rs = [_exponent(x) for x in (args.r or [])]
        us = [_exponent(x) for x in (args.u or [])]
        vs = [_exponent(x) for x in (args.v or [])]
        grid = list(itertools.product(rs, us, vs))
    if not grid:
        raise UsageError("empty grid: give --grid default or at least one each of --r --u --v")
    try:
        for r, u, v in grid:
            LimitOrderQuery(r, u, v)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dims = parse_range(args.empirical) if args.empirical else [2, 3]
    if args.empirical and len(dims) < 2:
        raise UsageError("--empirical needs at least two dimensions")
    rows = atlas(grid, dims, config, fit=bool(args.empirical))
    if config.format == "csv":
        emit(None, config, rows_to_csv(rows))
    else:
        rep = header("atlas", config)
        rep["rows"] = json.loads(rows_to_json(rows))
        emit(rep, config)
    bad = [r for r in rows if r.verdict not in ("agree", "formula_only")]
    return EXIT_OK if not bad else EXIT_UNCONVERGED


CHECK_FAMILIES = ("grothendieck", "mega", "l2l1", "linfty-a", "linfty-b", "nohipo-a",
                  "nohipo-b", "nohipo-c")


def cmd_check(args) -> int:
    from opideal.inequalities import (
        DEFAULT_TABLE,
        ConstantTable,
        check_cotype_family,
        check_grothendieck,
        check_mega,
    )

    config = make_config(args)
    if args.family not in CHECK_FAMILIES:
        raise UsageError(f"unknown family {args.family!r}; choose from {', '.join(CHECK_FAMILIES)}")
    table = DEFAULT_TABLE
    if args.constants:
        try:
            table = ConstantTable.load(args.constants)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load constants: {exc}") from None
    if args.family == "grothendieck":
        dims = parse_dims(args.dims or "3x3")
        rep = check_grothendieck(dims, args.samples, config.seed, table, config)
    elif args.family == "mega":
        if args.r is None or args.s is None or args.A is None:
            raise UsageError("mega needs --r, --s and --A")
        r, s = _exponent(args.r), _exponent(args.s)
        if r > s:
            raise UsageError("mega needs r <= s")
        if args.op:
            ops = [load_operator(args.op)]
        else:
            lo, hi = parse_dims(args.dims or "2..4")
            rng = np.random.default_rng(config.seed)
            ops = []
            for _ in range(args.samples):
                n, m = rng.integers(lo, hi + 1, size=2)
                u, v = rng.choice([1.0, 2.0, INF], size=2)
                from opideal.summing import OperatorMatrix
                ops.append(OperatorMatrix.from_array(rng.uniform(-1, 1, (m, n)), u, v))
        reports = [check_mega(T, r, s, args.A, config) for T in ops]
        rep = reports[0]
        for other in reports[1:]:
            for m in other.margins:
                rep.record(0.0, m)
    else:
        lo, hi = parse_dims(args.dims or "2..4")
        rep = check_cotype_family(args.family, (lo, hi), args.samples, config.seed, table, config)
    out = header("check", config)
    out["report"] = rep.to_dict()
    if not args.report_min_c:
        out["report"].pop("min_c", None)
    emit(out, config)
    return EXIT_OK if rep.passed in (True, None) else EXIT_UNCONVERGED


def selftest_battery():
    """Small operators covering every norm kind and witness type."""
    from opideal.summing import OperatorMatrix

    rng = np.random.default_rng(7)
    A = rng.uniform(-1, 1, (3, 3))
    B = rng.uniform(-1, 1, (2, 3))
    return [
        ("op", OperatorMatrix.from_array(A, 2, 1), INF),
        ("pi", OperatorMatrix.from_array(A, 2, 2), 2.0),
        ("pi", OperatorMatrix.from_array(B, INF, 2), 1.0),
        ("qn", OperatorMatrix.from_array(A, 1, 2), 1.0),
        ("kappa", OperatorMatrix.from_array(A, 2, INF), 1.0),
        ("kappa", OperatorMatrix.from_array(B, 1, 2), 2.0),
        ("kappa", OperatorMatrix.from_array(B, INF, 1), 4.0),
        ("kappa", OperatorMatrix.identity(2, 2, 2), 2.0),
        ("nu^p", OperatorMatrix.from_array(B, 1, 2), 2.0),
        ("nu_p", OperatorMatrix.from_array(B, 2, INF), 1.0),
        ("kappa", OperatorMatrix.from_array(np.zeros((2, 2)), 2, 2), 2.0),
    ]


def cmd_selftest(args) -> int:
    from opideal.verify import verify_report

    config = make_config(args)
    results = []
    if args.reports:
        for path in args.reports:
            try:
                rep = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read report {path}: {exc}") from None
            if "estimate" not in rep:
                raise UsageError(f"{path} is not a norm report")
            results.append((path, verify_report(rep, config)))
    else:
        for kind, T, p in selftest_battery():
            rep, _ = _norm_report("norm", kind, T, p, config)
            # round-trip through text so only the serialized certificate is used
            rep = json.loads(json.dumps(_clean(rep), sort_keys=True))
            results.append((f"{kind} p={exponent_to_json(p)} {T.domain}->{T.codomain}",
                            verify_report(rep, config)))
    out = header("selftest", config)
    out["results"] = [dict(v.to_dict(), name=name) for name, v in results]
    out["pass"] = all(v.ok for _, v in results)
    emit(out, config)
    return EXIT_OK if out["pass"] else EXIT_UNCONVERGED


# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="random seed (OPIDEAL_SEED overrides)")
    p.add_argument("--gap-rel", dest="gap_rel", type=float, default=None)
    p.add_argument("--feas", type=float, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--rounds", dest="engine_rounds", type=int, default=None,
                   help="engine steps in the first refinement round")
    p.add_argument("--kappa-rounds", dest="kappa_rounds", type=int, default=None)
    p.add_argument("--atoms", dest="max_atoms", type=int, default=None)
    p.add_argument("--functionals", dest="functional_budget", type=int, default=None)
    p.add_argument("--rank", dest="rank_budget", type=int, default=None)
    p.add_argument("--nuclear-rounds", dest="nuclear_rounds", type=int, default=None)
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opideal",
                                     description="Two-sided estimates of p-compact and related ideal norms.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="estimate one norm of one operator")
    p.add_argument("--kind", choices=NORM_KINDS, required=True)
    p.add_argument("--p", default="2")
    p.add_argument("--op", required=True, help="operator JSON file or inline JSON")
    _add_common(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("certify", help="duality-gap run for kappa_p")
    p.add_argument("--p", default="2")
    p.add_argument("--op", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("atlas", help="limit-order table, optionally with empirical slopes")
    p.add_argument("--grid", choices=("default",), default=None)
    p.add_argument("--r", nargs="*")
    p.add_argument("--u", nargs="*")
    p.add_argument("--v", nargs="*")
    p.add_argument("--empirical", default=None, metavar="LO..HI")
    _add_common(p)
    p.set_defaults(func=cmd_atlas)

    p = sub.add_parser("check", help="randomized inequality checks")
    p.add_argument("family", help=", ".join(CHECK_FAMILIES))
    p.add_argument("--dims", default=None, help="'3x3' or '2..4'")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--r", default=None)
    p.add_argument("--s", default=None)
    p.add_argument("--op", default=None)
    p.add_argument("--constants", default=None, help="JSON constant table")
    p.add_argument("--report-min-c", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("selftest", help="re-verify reports from their certificates")
    p.add_argument("reports", nargs="*", help="report files; default runs a built-in battery")
    _add_common(p)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"opideal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
