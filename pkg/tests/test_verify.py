import csv
import io
import math
from fractions import Fraction

import pytest

from kleinsail.errors import PerturbationTooLarge, ZeroCoordinate
from kleinsail.lattice import LatticeSpec
from kleinsail.numeric import compare
from kleinsail.verify import (
    CSV_HEADER,
    counterexample_build,
    counterexample_matrix,
    hyperbolic_normalize,
    lattice_suite,
    perturbed_lattice,
    prop1_scan,
    quadratic_lattice,
    scan_patches,
    shortest_vector_check,
    theorem1_report,
)

from oracles import brute_dominating_point


def test_normalize_explicit_image():
    nv = hyperbolic_normalize(None, ["2", "-3", "1/2"])
    # Pi^3 = 3, so every |u_i| encloses 3^(1/3)
    assert compare(nv.pi_power, 3) == 0
    for lo, hi in nv.u:
        assert lo <= 3 ** (1 / 3) <= hi
        assert hi - lo < 1e-12
    assert nv.det_is_unit


def test_normalize_preimage():
    lat = quadratic_lattice(1)
    nv = hyperbolic_normalize(lat, (1, -1, 2))
    assert nv.z == (1, -1, 2)
    assert nv.det_is_unit
    prod = 1.0
    for c in nv.w:
        prod *= abs(float(c))
    assert nv.pi[0] <= prod ** (1 / 3) * (1 + 1e-12) and nv.pi[1] >= prod ** (1 / 3) * (1 - 1e-12)


def test_zero_coordinate_rejected():
    with pytest.raises(ZeroCoordinate):
        hyperbolic_normalize(None, ["1", "0", "2"])
    with pytest.raises(ZeroCoordinate):
        hyperbolic_normalize(LatticeSpec(counterexample_matrix(3)), (0, 3, 1))


def test_counterexample_vertex_is_shortest():
    lat = LatticeSpec(counterexample_matrix(3))
    # (1,1,1) maps to (n^2-n+1)(1,1,1): every coordinate equal, no normalization needed
    assert all(compare(c, 7) == 0 for c in lat.forms.apply((1, 1, 1)))
    res = shortest_vector_check(hyperbolic_normalize(lat, (1, 1, 1)))
    assert res.ok and res.witness is None


def test_non_vertex_is_not_shortest():
    lat = quadratic_lattice(2)
    v = next(z for patch in scan_patches(lat, 40).values() for z in patch.certified)
    res = shortest_vector_check(hyperbolic_normalize(lat, tuple(2 * c for c in v)))
    assert not res.ok
    assert brute_dominating_point(lat.forms.to_text(), tuple(2 * c for c in v)) is not None


@pytest.mark.parametrize("k", [0, 4])
def test_shortest_matches_brute_force(k):
    lat = quadratic_lattice(k)
    rows = lat.forms.to_text()
    checked = 0
    for patch in scan_patches(lat, 40).values():
        for z in patch.certified[:2]:
            res = shortest_vector_check(hyperbolic_normalize(lat, z))
            assert res.ok
            assert brute_dominating_point(rows, z) is None
            checked += 1
    assert checked >= 4


def test_shortest_scale_validation():
    nv = hyperbolic_normalize(LatticeSpec(counterexample_matrix(3)), (1, 1, 1))
    with pytest.raises(ValueError):
        shortest_vector_check(nv, search_scale=1.5)
    with pytest.raises(ValueError):
        shortest_vector_check(hyperbolic_normalize(None, ["1", "2", "3"]))


def test_prop1_scan_records():
    lat = quadratic_lattice(3)
    scan = prop1_scan(lat, 40)
    assert scan.positive
    assert scan.c_emp is not None and scan.c_emp[0] > 0
    for r in scan.records:
        # independent float recomputation of det * Pi^(3/2)
        w = [float(c) for c in lat.forms.apply(r.v)]
        pi3 = abs(w[0] * w[1] * w[2]) / float(lat.abs_det)
        assert r.ratio[0] <= r.det_st * math.sqrt(pi3) * (1 + 1e-12)
        assert r.ratio[1] >= r.det_st * math.sqrt(pi3) * (1 - 1e-12)
        assert r.in_range == (max(abs(c) for c in w) ** 3 > float(lat.abs_det))
    assert min(r.ratio[0] for r in scan.records if r.in_range) == scan.c_emp[0]


def test_prop1_csv_layout():
    text = prop1_scan(quadratic_lattice(5), 30).to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_HEADER
    assert all(len(r) == len(CSV_HEADER) for r in rows[1:])


def test_prop1_rerun_is_identical():
    lat = quadratic_lattice(6)
    a, b = prop1_scan(lat, 30), prop1_scan(quadratic_lattice(6), 30)
    assert a.to_csv() == b.to_csv()
    assert a.c_emp == b.c_emp


def test_theorem1_report_fields():
    rep = theorem1_report(quadratic_lattice(3), 40)
    assert rep.lhs >= 0 and rep.rhs >= 0
    assert rep.margin == pytest.approx(rep.rhs - rep.lhs)
    assert rep.chain and rep.chain_ok
    data = rep.to_json()
    assert data["chain_ok"] is True and "margin" in data


@pytest.mark.parametrize("n", [3, 4, 7])
def test_counterexample_exact(n):
    rep = counterexample_build(n)
    assert rep.det_st == (n - 1) ** 3 - 1
    assert rep.product == Fraction((n * n - n + 1) ** 3, (n**3 + 1) ** 2)
    assert rep.faces_ok and len(rep.bounded_faces) == 3
    assert rep.ok
    assert rep.to_json()["pi_cubed"] == f"{(n * n - n + 1) ** 3}/{(n**3 + 1) ** 2}"


def test_counterexample_star_directions():
    rep = counterexample_build(3)
    assert sorted(rep.star) == [(-1, 2, 0), (0, -1, 2), (2, 0, -1)]
    assert rep.to_json()["pi_cubed_reduced"] == "7/16"


def test_small_perturbation_keeps_star():
    rep = counterexample_build(4, Fraction(1, 1600))
    assert rep.star_preserved and rep.ok


def test_large_perturbation_reported():
    with pytest.raises(PerturbationTooLarge):
        counterexample_build(3, Fraction(1, 10))


def test_perturbed_forms_do_not_vanish():
    lat = perturbed_lattice(3)
    assert not lat.forms.is_rational
    with pytest.raises(ZeroCoordinate):
        hyperbolic_normalize(LatticeSpec(counterexample_matrix(3)), (0, 3, 1))
    nv = hyperbolic_normalize(lat, (0, 3, 1))
    assert all(c.sign() != 0 for c in nv.w)


def test_suite_shape():
    suite = lattice_suite()
    assert len(suite) >= 20
    assert len({name for name, _ in suite}) == len(suite)
    assert sum(name.startswith("cone-n") for name, _ in suite) == 12
