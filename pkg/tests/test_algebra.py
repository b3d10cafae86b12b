import random

import pytest

from hybridwlp.algebra import (
    DEFAULT_GROUPS,
    LAWS,
    check_law,
    check_laws,
    fpred,
    laws_in_groups,
    rel,
    rel_antidomain,
    rel_antirange,
    rel_compose,
    rel_converse,
    rel_domain,
    rel_fbox,
    rel_fdia,
    rel_id,
    rel_leq,
    rel_of_sta,
    rel_star,
    rel_union,
    rel_zero,
    sta,
    sta_antidomain,
    sta_eta,
    sta_fbox,
    sta_kleisli,
    sta_of_rel,
    sta_star,
    sta_union,
    sta_zero,
    _rel_all,
    _rel_random,
)


class TestRelOps:
    def test_compose_example(self):
        r = rel(3, [(0, 1), (1, 2)])
        s = rel(3, [(1, 2), (2, 0)])
        assert rel_compose(r, s).pairs == frozenset({(0, 2), (1, 0)})

    def test_compose_unit_and_zero(self):
        r = rel(3, [(0, 1), (2, 2)])
        assert rel_compose(rel_id(3), r).pairs == r.pairs
        assert rel_compose(r, rel_zero(3)).pairs == frozenset()

    def test_compose_dimension_mismatch(self):
        with pytest.raises(ValueError):
            rel_compose(rel_id(2), rel_id(3))

    def test_star_examples(self):
        assert rel_star(rel_zero(3)).pairs == rel_id(3).pairs
        assert rel_star(rel_id(3)).pairs == rel_id(3).pairs
        chain = rel(3, [(0, 1), (1, 2)])
        assert rel_star(chain).pairs == rel_id(3).pairs | {(0, 1), (1, 2), (0, 2)}

    def test_antidomain_examples(self):
        assert rel_antidomain(rel_zero(2)).pairs == rel_id(2).pairs
        assert rel_antidomain(rel_id(2)).pairs == frozenset()
        assert rel_antidomain(rel(2, [(0, 1)])).pairs == frozenset({(1, 1)})

    def test_antidomain_axioms_hold(self):
        for r in _rel_all(2):
            ad = rel_antidomain(r)
            assert rel_compose(ad, r).pairs == frozenset()
            assert rel_union(ad, rel_antidomain(ad)).pairs == rel_id(2).pairs

    def test_antirange_is_antidomain_of_converse(self):
        r = rel(3, [(0, 1), (1, 2)])
        assert rel_antirange(r).pairs == rel_antidomain(rel_converse(r)).pairs

    def test_fbox_examples(self):
        p = fpred(2, [0])
        assert rel_fbox(rel_id(2), p).members == p.members
        assert rel_fbox(rel_zero(2), p).members == {0, 1}
        r = rel(2, [(0, 0), (0, 1)])
        assert rel_fbox(r, p).members == {1}

    def test_matrix_view(self):
        r = rel(2, [(0, 1)])
        assert r.matrix == ((False, True), (False, False))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            rel(2, [(0, 2)])


class TestStaOps:
    def test_eta_unit(self):
        f = sta(3, [{1}, {0, 2}, set()])
        assert sta_kleisli(sta_eta(3), f).successors == f.successors
        assert sta_kleisli(f, sta_eta(3)).successors == f.successors

    def test_fbox_empty_transformer(self):
        f = sta_zero(3)
        assert sta_fbox(f, fpred(3, [1])).members == {0, 1, 2}

    def test_fbox_composition_law_randomized(self):
        rng = random.Random(9)
        for _ in range(200):
            f = sta_of_rel(_rel_random(3, rng))
            g = sta_of_rel(_rel_random(3, rng))
            p = fpred(3, [i for i in range(3) if rng.random() < 0.5])
            lhs = sta_fbox(sta_kleisli(f, g), p)
            rhs = sta_fbox(f, sta_fbox(g, p))
            assert lhs.members == rhs.members

    def test_wrong_successor_count(self):
        with pytest.raises(ValueError):
            sta(3, [{0}, {1}])


class TestIsomorphism:
    def test_roundtrip_all_16(self):
        for r in _rel_all(2):
            assert rel_of_sta(sta_of_rel(r)).pairs == r.pairs

    def test_eta_is_identity_image(self):
        assert sta_of_rel(rel_id(3)).successors == sta_eta(3).successors

    def test_operations_commute_randomized(self):
        rng = random.Random(21)
        for _ in range(100):
            r = _rel_random(4, rng)
            s = _rel_random(4, rng)
            assert sta_of_rel(rel_compose(r, s)).successors == sta_kleisli(
                sta_of_rel(r), sta_of_rel(s)
            ).successors
            assert sta_of_rel(rel_union(r, s)).successors == sta_union(
                sta_of_rel(r), sta_of_rel(s)
            ).successors
            assert sta_of_rel(rel_star(r)).successors == sta_star(sta_of_rel(r)).successors
            assert sta_of_rel(rel_antidomain(r)).successors == sta_antidomain(
                sta_of_rel(r)
            ).successors


class TestDioidInvariants:
    def test_exhaustive_n2(self):
        for r in _rel_all(2):
            for s in _rel_all(2):
                assert rel_compose(rel_id(2), r).pairs == r.pairs
                assert rel_compose(r, rel_id(2)).pairs == r.pairs
                u = rel_union(r, s)
                assert rel_leq(r, u) and rel_leq(s, u)

    def test_distributivity_randomized_n5(self):
        rng = random.Random(2)
        for _ in range(150):
            r, s, w = (_rel_random(5, rng) for _ in range(3))
            lhs = rel_compose(rel_union(r, s), w)
            rhs = rel_union(rel_compose(r, w), rel_compose(s, w))
            assert lhs.pairs == rhs.pairs
            lhs2 = rel_compose(r, rel_compose(s, w))
            rhs2 = rel_compose(rel_compose(r, s), w)
            assert lhs2.pairs == rhs2.pairs

    def test_star_axioms_randomized(self):
        rng = random.Random(3)
        for _ in range(150):
            r, s, w = (_rel_random(4, rng) for _ in range(3))
            star = rel_star(r)
            assert rel_leq(rel_union(rel_id(4), rel_compose(r, star)), star)
            if rel_leq(rel_union(w, rel_compose(r, s)), s):
                assert rel_leq(rel_compose(star, w), s)

    def test_box_equals_antidomain_formula(self):
        from hybridwlp.algebra import pred_to_rel, rel_to_pred

        for r in _rel_all(2):
            for bits in range(4):
                p = fpred(2, [i for i in range(2) if bits >> i & 1])
                direct = rel_fbox(r, p)
                via = rel_to_pred(
                    rel_antidomain(rel_compose(r, rel_antidomain(pred_to_rel(p))))
                )
                assert direct.members == via.members

    def test_domain_retracts_onto_subidentities(self):
        for r in _rel_all(2):
            d = rel_domain(r)
            assert rel_leq(d, rel_id(2))
            assert rel_domain(d).pairs == d.pairs


class TestInvariantClosure:
    def test_enumerated_n3(self):
        # meet and join of invariants are invariants, full enumeration
        rng = random.Random(4)
        count = 0
        for _ in range(400):
            r = _rel_random(3, rng)
            for pb in range(8):
                for qb in range(8):
                    p = fpred(3, [i for i in range(3) if pb >> i & 1])
                    q = fpred(3, [i for i in range(3) if qb >> i & 1])
                    if (
                        p.members <= rel_fbox(r, p).members
                        and q.members <= rel_fbox(r, q).members
                    ):
                        meet = fpred(3, p.members & q.members)
                        join = fpred(3, p.members | q.members)
                        assert meet.members <= rel_fbox(r, meet).members
                        assert join.members <= rel_fbox(r, join).members
                        count += 1
        assert count > 100


class TestLawHarness:
    def test_dioid_exhaustive_n2_passes(self):
        reports = check_laws("rel", 2, laws_in_groups(["dioid"]), mode="exhaustive")
        assert all(r.passed for r in reports)

    def test_star_induction_randomized_n3(self):
        report = check_law(
            "rel", 3, "star-induction-left", mode="random", seed=0, trials=10000
        )
        assert report.passed and report.checked == 10000

    def test_wrong_law_found_with_counterexample(self):
        report = check_law("rel", 2, "compose-comm", mode="exhaustive")
        assert not report.passed
        assert report.counterexample

    def test_unknown_law_rejected(self):
        with pytest.raises(KeyError):
            check_law("rel", 2, "no-such-law")

    def test_exhaustive_gate(self):
        with pytest.raises(ValueError):
            check_law("rel", 3, "compose-assoc", mode="exhaustive")
        with pytest.raises(ValueError):
            check_law("rel", 4, "union-idem", mode="exhaustive")

    def test_deterministic_given_seed(self):
        a = check_law("sta", 3, "box-seq", mode="random", seed=5, trials=200)
        b = check_law("sta", 3, "box-seq", mode="random", seed=5, trials=200)
        assert a.to_json() == b.to_json()

    def test_default_groups_cover_registry(self):
        names = laws_in_groups(DEFAULT_GROUPS)
        assert "compose-comm" not in names
        assert set(names) <= set(LAWS)

    def test_sta_model_mirrors_rel(self):
        for name in laws_in_groups(["antidomain", "box"]):
            assert check_law("sta", 2, name, mode="exhaustive").passed


class TestDiamondImageSemantics:
    def test_forward_diamond_is_preimage(self):
        r = rel(3, [(0, 1), (1, 2)])
        assert rel_fdia(r, fpred(3, [2])).members == {1}

    def test_backward_diamond_is_image(self):
        from hybridwlp.algebra import rel_bdia, sta_bdia

        r = rel(3, [(0, 1), (1, 2)])
        assert rel_bdia(r, fpred(3, [0, 1])).members == {1, 2}
        assert sta_bdia(sta_of_rel(r), fpred(3, [0, 1])).members == {1, 2}

    def test_backward_box(self):
        from hybridwlp.algebra import rel_bbox

        r = rel(3, [(0, 1), (2, 1)])
        # states reachable only from inside p
        assert rel_bbox(r, fpred(3, [0])).members == {0, 2}
