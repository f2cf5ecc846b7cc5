from fractions import Fraction

import pytest

from dp4.arith import PLACE_INF, Place, legendre
from dp4.brauer import (
    CLASS_TAGS,
    IndeterminateEvaluationError,
    bm_verdict,
    class_representations,
    evaluate_invariant,
    invariant_image,
    quadres_counts,
    quadres_witness,
    reciprocity_check,
    s_family_params,
    surjectivity_witness,
    y_family_params,
)
from dp4.localsolve import sample_local_points
from dp4.quadform import SubfamilySurface

from helpers import CASE_PATTERN_SURFACES, INSOLUBLE_AT_P

ZERO = Fraction(0)
HALF = Fraction(1, 2)

Y_13_2_6 = SubfamilySurface(13, 2, -13, 1, -6, 1)
Y_13_1_12 = SubfamilySurface(13, 1, -13, 1, -12, 1)
Y_13_12_1 = SubfamilySurface(13, 12, -13, 1, -1, 1)
S_13 = SubfamilySurface(13, 1, 1, 153, 179, 1)


def test_family_detection():
    assert y_family_params(Y_13_2_6) == (13, 2, 6)
    assert y_family_params(S_13) is None
    assert s_family_params(S_13) == (13, 153, 179)
    assert s_family_params(Y_13_2_6) is None


def test_representation_consistency_on_sampled_points():
    # every pair of simultaneously determinate representations agrees
    # (evaluate_invariant asserts this internally; drive it over many points)
    for s in (Y_13_2_6, S_13, CASE_PATTERN_SURFACES["case2"]):
        for q in (2, 3, s.p):
            for pt in sample_local_points(s, q, 12, 14 if q == 2 else 8, seed=3):
                for tag in CLASS_TAGS:
                    try:
                        evaluate_invariant(s, tag, pt)
                    except IndeterminateEvaluationError:
                        pass


def test_invariant_A_at_p_is_half_on_obstructed_family_member():
    for pt in sample_local_points(Y_13_2_6, 13, 16, 8, seed=5):
        assert evaluate_invariant(Y_13_2_6, "A", pt) == HALF


def test_invariant_A_away_from_p_vanishes():
    for q in (2, 3, 5):
        for pt in sample_local_points(Y_13_2_6, q, 10, 14 if q == 2 else 8, seed=5):
            assert evaluate_invariant(Y_13_2_6, "A", pt) == ZERO


def test_invariant_B_flip_for_3mod4():
    s = CASE_PATTERN_SURFACES["p3mod4"]
    pts = sample_local_points(s, 7, 8, 8, seed=2)
    flipped_values = set()
    for pt in pts:
        mod = 7 ** pt.k
        u, v, x, y, z = pt.coords
        flip = (u, v, x, (-y) % mod, (-z) % mod)
        from dp4.localsolve import normalize_residue_tuple

        pt2 = normalize_residue_tuple(7, pt.k, flip)
        try:
            v1 = evaluate_invariant(s, "B", pt)
            v2 = evaluate_invariant(s, "B", pt2)
        except IndeterminateEvaluationError:
            continue
        assert v1 != v2
        flipped_values.add((v1, v2))
    assert flipped_values


def test_klein_four_identity():
    for s in (Y_13_2_6, S_13, CASE_PATTERN_SURFACES["case4"]):
        for q in (2, s.p):
            for pt in sample_local_points(s, q, 10, 14 if q == 2 else 8, seed=9):
                try:
                    a = evaluate_invariant(s, "A", pt)
                    b = evaluate_invariant(s, "B", pt)
                    c = evaluate_invariant(s, "C", pt)
                except IndeterminateEvaluationError:
                    continue
                assert (a + b) % 1 == c


def test_invariant_images_paper_values():
    assert set(invariant_image(Y_13_2_6, "B", 13, use_theorems=False).values) == {ZERO, HALF}
    assert set(invariant_image(Y_13_2_6, "A", 13, use_theorems=False).values) == {HALF}
    assert set(invariant_image(Y_13_1_12, "A", 13, use_theorems=False).values) == {ZERO}
    assert set(invariant_image(S_13, "B", 13, use_theorems=False).values) == {HALF}
    img = invariant_image(Y_13_2_6, "A", 13)
    assert img.kind == "theorem" and set(img.values) == {HALF}


def test_quadres_counts_lemma_values():
    assert quadres_counts(13, 1, 1) == (1, 2, 3)
    assert quadres_counts(13, 1, 2) == (0, 3, 3)
    assert quadres_counts(17, 1, 1) == (1, 3, 4)


def brute_quadres(p, a, b):
    values = {(a + b * y * y) % p for y in range(1, p)}
    squares = {x * x % p for x in range(1, p)}
    zero = sum(1 for v in values if v == 0)
    sq = sum(1 for v in values if v in squares)
    return (zero, sq, len(values) - zero - sq)


@pytest.mark.parametrize("p", [13, 17, 29, 37])
def test_quadres_counts_formulas(p):
    nonsq = next(g for g in range(2, p) if legendre(g, p) == -1)
    for a in (1, 4):
        assert quadres_counts(p, a, 1) == brute_quadres(p, a, 1) == (1, (p - 5) // 4, (p - 1) // 4)
        assert quadres_counts(p, a, nonsq) == brute_quadres(p, a, nonsq) == (0, (p - 1) // 4, (p - 1) // 4)


def test_quadres_witness():
    y0 = quadres_witness(13, 1, 1, 1, 1)
    brute = next(y for y in range(1, 13)
                 if legendre(1 + y * y, 13) == -1 and legendre(1 + y * y, 13) == -1)
    assert y0 == brute
    assert quadres_witness(13, 1, 1, 4, 4) == y0  # scaling by squares changes nothing
    with pytest.raises(ValueError):
        quadres_witness(13, 2, 1, 1, 1)  # 2 is not a square mod 13


def test_witness_paper_surfaces():
    w = surjectivity_witness(Y_13_2_6)
    assert w.tag == "B" and sorted(w.values) == [ZERO, HALF]
    w = surjectivity_witness(S_13)
    assert w.tag == "A" and sorted(w.values) == [ZERO, HALF]
    # the first constructed point is (1 : 0 : 0 : 0 : sqrt(AC))
    u, v, x, y, z = w.point1.coords
    assert (v, x, y) == (0, 0, 0) and u == 1
    mod = 13 ** w.point1.k
    assert (z * z - 153) % mod == 0
    w = surjectivity_witness(Y_13_1_12)
    assert w.tag == "B" and "case 1a" in " ".join(w.case_trace)


@pytest.mark.parametrize("name", sorted(CASE_PATTERN_SURFACES))
def test_witness_all_case_patterns(name):
    s = CASE_PATTERN_SURFACES[name]
    w = surjectivity_witness(s)
    assert not w.insoluble_at_p
    assert w.values[0] != w.values[1]
    # re-evaluate rather than trusting the recorded values
    assert evaluate_invariant(s, w.tag, w.point1) != evaluate_invariant(s, w.tag, w.point2)


def test_witness_insoluble_detection():
    for s in INSOLUBLE_AT_P[:2]:
        w = surjectivity_witness(s)
        assert w.insoluble_at_p


def test_witness_determinism():
    w1 = surjectivity_witness(Y_13_2_6, seed=4)
    w2 = surjectivity_witness(Y_13_2_6, seed=4)
    assert w1.point1.coords == w2.point1.coords and w1.point2.coords == w2.point2.coords


def test_bm_verdict_paper_surfaces():
    assert bm_verdict(Y_13_2_6).hp_obstructed_by == ("A",)
    rep = bm_verdict(Y_13_1_12)
    assert rep.hp_obstructed_by == () and rep.wa_failure
    assert bm_verdict(Y_13_12_1).hp_obstructed_by == ()
    rep_s = bm_verdict(S_13)
    assert rep_s.hp_obstructed_by == ("B",) and rep_s.wa_failure
    assert not rep_s.unknown_classes


def test_bm_verdict_requires_local_solubility():
    with pytest.raises(ValueError):
        bm_verdict(INSOLUBLE_AT_P[0])


def test_bm_verdict_json_shape():
    payload = bm_verdict(Y_13_2_6).to_json()
    entry = next(e for e in payload["entries"] if e["class"] == "A" and e["place"] == "13")
    assert entry["image"] == ["1/2"]
    assert entry["evidence"]["kind"] in ("theorem", "sampled", "witness-pair")


def test_reciprocity_at_paper_points():
    assert reciprocity_check(Y_13_1_12, (1, 0, 0, 0, 1))
    assert reciprocity_check(Y_13_12_1, (1, -3, 2, 7, 16))
    with pytest.raises(ValueError):
        reciprocity_check(Y_13_2_6, (1, 0, 0, 0, 1))  # not on the surface


def test_rational_point_evaluation_at_real_place():
    assert evaluate_invariant(Y_13_1_12, "A", (1, 0, 0, 0, 1), PLACE_INF) == ZERO


def test_rational_point_evaluation_matches_local():
    # exact evaluation at 13 agrees with the evaluation through residues
    pt = (1, -3, 2, 7, 16)
    exact = evaluate_invariant(Y_13_12_1, "B", pt, Place(13))
    from dp4.localsolve import normalize_residue_tuple

    local = normalize_residue_tuple(13, 6, pt)
    assert exact == evaluate_invariant(Y_13_12_1, "B", local)


def test_class_representations_have_expected_fractions():
    reps = {r.label for r in class_representations(Y_13_2_6, "A")}
    assert "u/(Au+Bv)" in reps and "Mv/(Au+Bv)" in reps
    reps_b = {r.label for r in class_representations(Y_13_2_6, "B")}
    assert "(z-y)/u" in reps_b and "AC(z+y)/u" in reps_b
    reps_c = {r.label for r in class_representations(Y_13_2_6, "C")}
    assert "(Au+Bv)/(z-y)" in reps_c


def test_generic_surfaces_formerly_undersampled_do_not_claim_obstruction():
    # each of these has small rational points; a verdict claiming a
    # Hasse-principle obstruction here would be an undersampling artifact
    from dp4.families import point_search

    for tup in [(5, 5, 1, 1, 1, -4), (13, 13, 1, 1, 1, 27), (13, 1, 4, 4, 3, -13),
                (13, 1, 4, 4, 3, 39), (13, 13, 1, 1, 3, -12)]:
        s = SubfamilySurface(*tup)
        rep = bm_verdict(s, sample_budget=24)
        assert rep.hp_obstructed_by == (), (tup, rep.hp_obstructed_by)
        assert rep.wa_failure
        assert point_search(s, 100)  # the refuting points really exist
