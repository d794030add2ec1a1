"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with its timing.  Run it
as a script (``python tests/test_acceptance.py``) to get only those lines.
Expected values come from closed forms or from the brute-force oracles in
``oracles.py``; tolerances are the pinned ones, nothing is loosened.
"""

import functools
import math
import random
import sys
import time
from fractions import Fraction

import pytest

from kleinsail.contfrac import cf_expand, mu_estimate
from kleinsail.klein2d import build_polygon, duality_check, mu_via_vertices
from kleinsail.klein3d import (
    SimplicialCone,
    build_patch,
    det_star,
    edge_star,
    enumerate_cone_points,
    orthant_patches,
    zonotope_volume,
)
from kleinsail.lattice import FormMatrix, LatticeSpec, enumerate_points, omega_estimate
from kleinsail.numeric import parse_real
from kleinsail.verify import (
    counterexample_build,
    counterexample_rays,
    hyperbolic_normalize,
    lattice_suite,
    prop1_scan,
    shortest_vector_check,
    theorem1_report,
)

from oracles import (
    brute_cone_points,
    brute_points,
    brute_points_exact,
    zonotope_volume_formula,
)

GOLDEN = ("1/2+1/2*sqrt(5)", "1/2-1/2*sqrt(5)")
SEED = 20240917


@pytest.fixture
def say(request):
    reporter = request.config.pluginmanager.getplugin("terminalreporter")

    def emit(line):
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        else:
            print(line)

    return emit


def verdict(say, number, ok, detail, started):
    say(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} ({time.perf_counter() - started:.1f} s)")
    return ok


def slopes(t1, t2):
    return FormMatrix([[t1, "-1"], [t2, "-1"]])


@functools.lru_cache(maxsize=None)
def suite():
    return tuple(lattice_suite())


@functools.lru_cache(maxsize=None)
def patches(name, R):
    lat = dict(suite())[name]
    return orthant_patches(lat.forms, R)


def stars_of(patch):
    return {z: edge_star(patch, z).directions for z in patch.certified}


# -- 1 -------------------------------------------------------------------------

def test_counterexample_exact(say):
    t0 = time.perf_counter()
    bad, slowest = [], 0.0
    for n in range(3, 11):
        t = time.perf_counter()
        rep = counterexample_build(n, Fraction(0), R=20 * n)
        dt = time.perf_counter() - t
        slowest = max(slowest, dt)
        expected = Fraction((n * n - n + 1) ** 3, (n**3 + 1) ** 2)
        good = (
            rep.det_st == (n - 1) ** 3 - 1
            and rep.product == expected
            and len(rep.bounded_faces) == 3
            and rep.faces_ok
            and dt < 30
        )
        if not good:
            bad.append(n)
    ok = verdict(say, 1, not bad, f"n=3..10 exact star det, product and faces, slowest {slowest:.1f} s, bad n={bad}", t0)
    assert ok


# -- 2 -------------------------------------------------------------------------

def test_figures(say):
    t0 = time.perf_counter()
    P = build_polygon(slopes("11/8", "-3/8"), 11)
    k1 = [(8, -3), (3, -1), (1, 0), (1, 1), (3, 4), (8, 11)]
    k2 = [(8, 11), (2, 3), (0, 1), (-2, 1), (-8, 3)]
    chains = (
        P["K1"].vertices == k1
        and P["K2"].vertices == k2
        and P["-K1"].vertices == [(-x, -y) for x, y in k1]
        and P["-K2"].vertices == [(-x, -y) for x, y in k2]
    )
    Q = build_polygon(slopes("8/11", "-3/7"), 12)
    K1, K2 = Q["K1"], Q["K2"]
    m = duality_check(K1, K2)
    rec = next((r for r in m.pairs if r["vertex"] == [1, 0]), None)
    dual = rec is not None and rec["angle"] == 3 and rec["length"] == 3 and m.ok
    dt = time.perf_counter() - t0
    ok = verdict(say, 2, chains and dual and dt < 5, f"chains {'match' if chains else 'differ'}, (1,0) dual edge {rec and rec['edge']}", t0)
    assert ok


# -- 3 -------------------------------------------------------------------------

def test_golden_pair(say):
    t0 = time.perf_counter()
    F = slopes(*GOLDEN)
    W = 10**4
    P = build_polygon(F, W)
    unit = True
    for K in P.values():
        for e in K.edges:
            if K.certified[e.start] and K.certified[e.end]:
                unit = unit and e.length == 1
    mu = mu_estimate(cf_expand(parse_real(GOLDEN[0]), 20)).value
    om = omega_estimate(LatticeSpec(F), W).value
    rep = mu_via_vertices(F, W, P)
    triple = [rep.e1.value, rep.e2.value if rep.e2 else math.nan, rep.e3.value if rep.e3 else math.nan]
    close = all(abs(a - b) <= 0.1 for a, b in ((triple[0], triple[1]), (triple[0], triple[2]), (triple[1], triple[2])))
    dt = time.perf_counter() - t0
    ok = unit and mu == 2.0 and om <= 0.05 and close and dt < 60
    detail = f"unit lengths {unit}, mu {mu}, omega {om:.4f}, E=({triple[0]:.3f}, {triple[1]:.3f}, {triple[2]:.3f})"
    verdict(say, 3, ok, detail, t0)
    assert ok


# -- 4 -------------------------------------------------------------------------

def _random_star(rng):
    while True:
        k = rng.randint(3, 8)
        dirs = [tuple(rng.randint(-9, 9) for _ in range(3)) for _ in range(k)]
        if any(v == (0, 0, 0) for v in dirs):
            continue
        if zonotope_volume_formula(dirs) != 0:
            return dirs


def test_star_determinant_is_zonotope_volume(say):
    t0 = time.perf_counter()
    rng = random.Random(SEED)
    bad = []
    for i in range(200):
        dirs = _random_star(rng)
        d = det_star(dirs)
        if not (d == zonotope_volume(dirs) == zonotope_volume_formula(dirs)):
            bad.append(dirs)
    dt = time.perf_counter() - t0
    ok = verdict(say, 4, not bad and dt < 60, f"200 spanning stars, {len(bad)} mismatches", t0)
    assert ok


# -- 5 -------------------------------------------------------------------------

def _scan(name, R):
    lat = dict(suite())[name]
    return prop1_scan(lat, R, patches(name, R))


def test_prop1_positivity_and_regression(say):
    t0 = time.perf_counter()
    names = [name for name, _ in suite()]
    problems = []
    records = 0
    worst_margin = math.inf
    for name in names:
        lat = dict(suite())[name]
        first = _scan(name, 50)
        again = prop1_scan(lat, 50, orthant_patches(lat.forms, 50))
        records += len(first.records)
        if not all(r.ratio[0] > 0 for r in first.records if r.in_range):
            problems.append(f"{name}: nonpositive lower bound")
        if first.c_emp != again.c_emp or first.to_csv() != again.to_csv():
            problems.append(f"{name}: rerun differs")
        rep = theorem1_report(lat, 100, _scan(name, 100))
        worst_margin = min(worst_margin, rep.margin)
        if rep.margin < -0.1:
            problems.append(f"{name}: margin {rep.margin:.3f} at R=100")
    ok = len(names) >= 20 and not problems
    detail = f"{len(names)} lattices, {records} certified vertices at R=50, worst margin {worst_margin:.3f}; {problems[:3]}"
    verdict(say, 5, ok, detail, t0)
    assert ok


# -- 6 -------------------------------------------------------------------------

def test_shortest_vector_property(say):
    t0 = time.perf_counter()
    total, failed = 0, []
    for name, lat in suite():
        for patch in patches(name, 50).values():
            for z in patch.certified:
                total += 1
                res = shortest_vector_check(hyperbolic_normalize(lat, z))
                if not res.ok:
                    failed.append((name, z, res.witness))
    ok = total > 0 and not failed
    verdict(say, 6, ok, f"{total - len(failed)}/{total} certified vertices are shortest; {failed[:2]}", t0)
    assert ok


# -- 7 -------------------------------------------------------------------------

def _stable(small, large):
    """Every vertex certified in ``small`` is certified in ``large`` with the same star."""
    big = stars_of(large)
    return all(big.get(z) == d for z, d in stars_of(small).items())


def test_certification_stability(say):
    t0 = time.perf_counter()
    checked, unstable = 0, []
    for R in (10, 20, 50):
        for n in range(3, 7):
            cone = SimplicialCone.from_rays(counterexample_rays(n))
            checked += 1
            if not _stable(build_patch(cone, R), build_patch(cone, 2 * R)):
                unstable.append((f"cone-n{n}", R))
        for name, _ in suite():
            small, large = patches(name, R), patches(name, 2 * R)
            for signs in small:
                checked += 1
                if not _stable(small[signs], large[signs]):
                    unstable.append((name, signs, R))
    ok = verdict(say, 7, not unstable, f"{checked} cones at R in (10, 20, 50) against 2R, unstable {unstable[:3]}", t0)
    assert ok


# -- 8 -------------------------------------------------------------------------

def _random_rational_rows(rng, n):
    while True:
        rows = [[str(Fraction(rng.randint(-6, 6), rng.randint(1, 3))) for _ in range(n)] for _ in range(n)]
        try:
            LatticeSpec(rows)
            return rows
        except Exception:
            continue


def _random_quadratic_rows(rng, n):
    d = rng.choice([2, 3, 5, 7])
    rows = []
    for i in range(n):
        row = [str(rng.randint(-3, 3)) for _ in range(n)]
        j = rng.randrange(n)
        row[j] = f"{rng.randint(-2, 2)}+{rng.choice([1, 2, -1])}*sqrt({d})"
        rows.append(row)
    rows[0][0] = "1"
    return rows


def _random_rays(rng):
    while True:
        rays = [tuple(rng.randint(-3, 3) for _ in range(3)) for _ in range(3)]
        a, b, c = rays
        det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
        if det != 0:
            return rays


def test_enumeration_completeness(say):
    t0 = time.perf_counter()
    rng = random.Random(SEED + 8)
    mismatches = []
    count = 0
    while count < 50:
        kind = count % 3
        if kind == 0:
            n = rng.choice([2, 3])
            rows = _random_rational_rows(rng, n)
            R = rng.choice([2, 3]) if n == 3 else rng.randint(2, 8)
            expected = brute_points_exact(rows, R)
        elif kind == 1:
            n = rng.choice([2, 3])
            rows = _random_quadratic_rows(rng, n)
            try:
                LatticeSpec(rows)
            except Exception:
                continue
            R = rng.choice([2, 3]) if n == 3 else rng.randint(2, 8)
            expected = brute_points(rows, R)
        else:
            rays = _random_rays(rng)
            R = rng.randint(2, 5)
            got = list(enumerate_cone_points(SimplicialCone.from_rays(rays), R))
            if got != brute_cone_points(rays, R):
                mismatches.append(("cone", rays, R))
            count += 1
            continue
        got = [tuple(int(c) for c in p.z) for p in enumerate_points(LatticeSpec(rows), R)]
        if got != [tuple(z) for z in expected]:
            mismatches.append(("lattice", rows, R))
        count += 1
    ok = verdict(say, 8, not mismatches, f"{count} instances, {len(mismatches)} mismatches {mismatches[:2]}", t0)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "--no-header", "-p", "no:cacheprovider"]))
