"""End-to-end acceptance criteria; each test prints one PASS/FAIL line.

Tolerances are pinned here and never loosened per run.
"""

import itertools
import json
import math
import time

import numpy as np

from opideal.atlas import LimitOrderQuery, _pieces, atlas, limit_order_formula, limit_order_summing
from opideal.cli import _clean, _norm_report, main, selftest_battery
from opideal.config import RunConfig
from opideal.inequalities import FAMILIES, check_cotype_family, check_grothendieck, check_mega
from opideal.kompact import kappa_norm
from opideal.nuclear import check_ell1_identity
from opideal.spaces import INF, dual_exponent
from opideal.summing import OperatorMatrix, operator_norm
from opideal.verify import verify_report

from conftest import ACCEPTANCE_LINES

SEED = 20261016
GAP = 0.05
SHARE = 0.95
TIME_LIMIT = 600.0
TOL = 1e-6
K_G = 1.78222
SLOPE_BAND = 0.15
BOUNDARY_SAMPLES = 10_000
EXPONENTS = (1.0, 2.0, INF)
CFG = RunConfig()


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def random_instance(rng, dims=(2, 4), domain=EXPONENTS):
    m, n = rng.integers(dims[0], dims[1] + 1, size=2)
    u, v = rng.choice(domain), rng.choice(EXPONENTS)
    return OperatorMatrix.from_array(rng.uniform(-1, 1, (m, n)), u, v)


def test_criterion_1_duality_gap():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    gaps = []
    for _ in range(50):
        T = random_instance(rng)
        p = float(rng.choice([1.0, 2.0, 4.0]))
        est = kappa_norm(T, p, CFG)
        gaps.append(est.rel_gap)
    elapsed = time.perf_counter() - start
    share = np.mean(np.array(gaps) <= GAP)
    record(1, share >= SHARE and elapsed <= TIME_LIMIT,
           f"{share:.0%} of 50 instances within {GAP:.0%} gap (need {SHARE:.0%}); "
           f"worst gap {max(gaps):.4f}; {elapsed:.0f}s (limit {TIME_LIMIT:.0f}s)")


def test_criterion_2_hilbert_identity():
    worst = 0.0
    ok = True
    for n in range(2, 7):
        est = kappa_norm(OperatorMatrix.identity(n, 2, 2), 2, CFG)
        # oracle: the unit vectors have weak 2-norm 1 (largest singular value of I)
        # and strong norm sqrt(n); the uniform measure on the sphere dominates with sqrt(n)
        E = np.eye(n)
        oracle = math.sqrt((np.linalg.norm(E, axis=1) ** 2).sum()) / np.linalg.norm(E, 2)
        for val in (est.lower, est.upper):
            worst = max(worst, abs(val / oracle - 1))
            ok &= 0.95 * math.sqrt(n) <= val <= 1.05 * math.sqrt(n)
    record(2, ok, f"kappa_2(id l_2^n) within [0.95, 1.05] sqrt(n) for n=2..6; worst deviation {worst:.2e}")


def test_criterion_3_l1_identity():
    rng = np.random.default_rng(SEED + 3)
    fails, worst = 0, 0.0
    for _ in range(30):
        T = random_instance(rng, domain=(1.0,))
        p = float(rng.choice([1.0, 2.0, 4.0]))
        rep = check_ell1_identity(T, p, CFG, rel=GAP, tol=TOL)
        fails += not rep.passed
        worst = max(worst, abs(rep.discrepancy))
    record(3, fails == 0, f"{30 - fails}/30 l_1-domain instances agree within {GAP:.0%}; "
                          f"worst discrepancy {worst:.4f}")


def test_criterion_4_monotonicity():
    rng = np.random.default_rng(SEED + 4)
    violations, opnorm_mismatch = 0, 0
    for _ in range(50):
        T = random_instance(rng)
        vals = {p: kappa_norm(T, p, CFG) for p in (1.0, 2.0, 4.0)}
        for p, q in itertools.combinations((1.0, 2.0, 4.0), 2):
            violations += vals[q].lower > vals[p].upper + TOL
        kinf, op = kappa_norm(T, INF, CFG), operator_norm(T, CFG)
        opnorm_mismatch += abs(kinf.lower - op.lower) > TOL or abs(kinf.upper - op.upper) > TOL
        violations += kinf.lower > vals[4.0].upper + TOL
    record(4, violations == 0 and opnorm_mismatch == 0,
           f"{violations} monotonicity violations, {opnorm_mismatch} kappa_inf/operator-norm "
           f"mismatches over 50 instances")


def _boundary_samples(rng, count):
    out = []
    kinds = ("v=r", "v=2", "u=r'", "u=2", "u=v'", "corner")
    for k in range(count):
        r = float(rng.choice([1.0, 2.0, 4.0, rng.uniform(1, 2), rng.uniform(2, 10)]))
        ir = 1.0 / r
        iu, iv = rng.uniform(0, 1, 2)
        kind = kinds[k % len(kinds)]
        if kind == "v=r":
            iv = ir
        elif kind == "v=2":
            iv = 0.5
        elif kind == "u=r'":
            iu = 1 - ir
        elif kind == "u=2":
            iu = 0.5
        elif kind == "u=v'":
            iu = 1 - iv
        else:
            iu, iv = 0.5, 0.5
        out.append((r, INF if iu == 0 else 1 / iu, INF if iv == 0 else 1 / iv))
    return out


def test_criterion_5_atlas():
    grid = list(itertools.product((1.0, 2.0, 4.0), EXPONENTS, EXPONENTS))
    rows = atlas(grid, range(2, 7), CFG)
    bad = [(r.r, r.u, r.v, round(r.slope_fit, 3), r.lambda_formula) for r in rows
           if abs(r.slope_fit - r.lambda_formula) > SLOPE_BAND + r.slope_err]
    rng = np.random.default_rng(SEED + 5)
    spread = 0.0
    for r, u, v in _boundary_samples(rng, BOUNDARY_SAMPLES):
        vals = [val for _, val in _pieces(r, u, v)]
        spread = max(spread, max(vals) - min(vals))
    sym_fail = 0
    sampled = list(itertools.product((1.0, 1.5, 2.0, 3.0, 4.0), (1.0, 4 / 3, 2.0, 4.0, INF),
                                     (1.0, 4 / 3, 2.0, 4.0, INF)))
    for r, u, v in sampled:
        q = LimitOrderQuery(r, u, v)
        swapped = LimitOrderQuery(r, dual_exponent(v), dual_exponent(u))
        sym_fail += limit_order_formula(q).value != limit_order_summing(swapped)
    ok = not bad and spread <= 1e-12 and sym_fail == 0
    record(5, ok, f"{len(rows) - len(bad)}/{len(rows)} slopes within {SLOPE_BAND} + err "
                  f"{bad if bad else ''}; boundary spread {spread:.1e} over {BOUNDARY_SAMPLES} samples; "
                  f"{sym_fail} symmetry mismatches over {len(sampled)} queries")


def test_criterion_6_grothendieck():
    rep = check_grothendieck((3, 3), samples=100, seed=SEED + 6, config=CFG)
    ok = rep.passed and rep.instances == 100 and rep.worst_margin >= -TOL
    record(6, ok, f"{rep.instances}/100 checked ({rep.excluded} excluded); "
                  f"worst margin {rep.worst_margin:.4f}")


def test_criterion_7_inequalities():
    rng = np.random.default_rng(SEED + 7)
    mega_fail, mega_total, mega_strict_fail = 0, 0, 0
    for _ in range(10):
        T = random_instance(rng)
        for r, s in itertools.combinations_with_replacement((1.0, 2.0, 4.0), 2):
            rep = check_mega(T, r, s, 1.0, CFG, tol=TOL)
            mega_total += 1
            if not rep.passed:
                mega_fail += 1
                mega_strict_fail += r < s
    fam_detail, fam_ok = [], True
    for family in sorted(FAMILIES):
        rep = check_cotype_family(family, (2, 4), samples=100, seed=SEED + 70, config=CFG)
        verdict = "min_c=%.3f" % rep.min_c if rep.passed is None else ("pass" if rep.passed else "FAIL")
        fam_ok &= rep.passed in (True, None) and rep.instances + rep.excluded == 100
        fam_detail.append(f"{family}:{verdict}" + (f"({rep.excluded} excluded)" if rep.excluded else ""))
    record(7, mega_fail == 0 and fam_ok,
           f"mega A=1: {mega_fail}/{mega_total} failed ({mega_strict_fail} with r<s); "
           + ", ".join(fam_detail))


def test_criterion_8_certificates():
    rng = np.random.default_rng(SEED + 8)
    cases = list(selftest_battery())
    kinds = ("kappa", "pi", "qn", "nu_p", "nu^p", "op")
    for k in range(18):
        T = random_instance(rng, dims=(2, 3))
        p = INF if kinds[k % 6] == "op" else float(rng.choice([1.0, 2.0, 4.0]))
        cases.append((kinds[k % 6], T, p))
    failed = []
    for kind, T, p in cases:
        rep, _ = _norm_report("norm", kind, T, p, CFG)
        rep = json.loads(json.dumps(_clean(rep), sort_keys=True))
        v = verify_report(rep, CFG)
        if not v.ok:
            failed.append((kind, str(T.domain), str(T.codomain), v.notes))
    cli_code = main(["selftest", "--output", "/dev/null"])
    record(8, not failed and cli_code == 0,
           f"{len(cases) - len(failed)}/{len(cases)} serialized reports re-verified; "
           f"selftest exit {cli_code} {failed if failed else ''}")
