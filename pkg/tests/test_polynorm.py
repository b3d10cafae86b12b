import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hybridwlp.expr import (
    Cos,
    Div,
    EvalError,
    Exp,
    Sin,
    Sub,
    SymConst,
    TimeVar,
    Var,
    const,
    evaluate,
    free_names,
)
from hybridwlp.polynorm import (
    NormalizeError,
    expr_eq,
    normalize,
    rational_combination,
    solve_linear_system,
)

x, y, v = Var("x"), Var("y"), Var("v")
t = TimeVar()
g, h, c, r = SymConst("g"), SymConst("h"), SymConst("c"), SymConst("r")


class TestNormalize:
    def test_collect(self):
        nf = normalize(x + x)
        assert nf == normalize(const(2) * x)

    def test_rotation_identity(self):
        e = (x * Cos(t) + y * Sin(t)) ** 2 + (y * Cos(t) - x * Sin(t)) ** 2
        assert normalize(Sub(e, x ** 2 + y ** 2)).is_zero()

    def test_expand_to_zero(self):
        e = const(2) * (x + 1) * (x - 1) - const(2) * x ** 2 + 2
        assert normalize(e).is_zero()

    def test_idempotent(self):
        for e in (x * y + x ** 2, (x + y) ** 3, Sin(x) ** 2 + Cos(x) ** 2):
            nf = normalize(e)
            assert normalize(nf.to_expr()) == nf

    def test_symconst_reciprocal_cancels(self):
        assert normalize(Sub(Div(c, c * c), Div(const(1), c))).is_zero()

    def test_opaque_division_flagged(self):
        nf = normalize(x / (x + 1))
        assert nf.has_opaque_div
        nf2 = normalize(x / c)
        assert not nf2.has_opaque_div

    def test_trig_at_zero_folds(self):
        assert normalize(Cos(const(0))) == normalize(const(1))
        assert normalize(Sin(x - x)).is_zero()
        assert normalize(Exp(const(0))) == normalize(const(1))

    def test_zero_denominator_raises(self):
        with pytest.raises(NormalizeError):
            normalize(x / (y - y))

    def test_eval_soundness_on_regression_set(self):
        rng = random.Random(11)
        exprs = [
            (x + y) ** 3 - x ** 3 - y ** 3,
            Sin(x) ** 2 * y + Cos(x) ** 2 * y,
            g * t ** 2 / const(2) + v * t + x,
            x * y / c + Exp(x) * Sin(y),
        ]
        for e in exprs:
            back = normalize(e).to_expr()
            names = sorted(free_names(e))
            done = 0
            while done < 1000:
                valuation = {n: rng.uniform(-2, 2) for n in names}
                try:
                    a = evaluate(e, valuation)
                    b = evaluate(back, valuation)
                except EvalError:
                    continue
                done += 1
                assert abs(a - b) <= 1e-9 * (1 + abs(a))


class TestExprEq:
    def test_double_angle_is_outside_the_fragment(self):
        res = expr_eq(Sin(const(2) * t), const(2) * Sin(t) * Cos(t))
        assert res.kind == "unknown"
        assert res.note == "likely-equal"

    def test_squares(self):
        assert expr_eq(x ** 2, x * x).is_equal

    def test_distinct_powers_with_witness(self):
        res = expr_eq(x ** 2, x ** 3)
        assert res.kind == "not-equal"
        a = evaluate(x ** 2, res.witness)
        b = evaluate(x ** 3, res.witness)
        assert abs(a - b) > 1e-9 * max(1.0, abs(a), abs(b))

    def test_equal_implies_numeric_agreement(self):
        rng = random.Random(5)
        a = (x + y) ** 2
        b = x ** 2 + const(2) * x * y + y ** 2
        assert expr_eq(a, b).is_equal
        for _ in range(200):
            valuation = {"x": rng.uniform(-5, 5), "y": rng.uniform(-5, 5)}
            fa, fb = evaluate(a, valuation), evaluate(b, valuation)
            assert abs(fa - fb) <= 1e-9 * max(1.0, abs(fa), abs(fb))

    def test_deterministic(self):
        r1 = expr_eq(x ** 2, x ** 3, seed=4)
        r2 = expr_eq(x ** 2, x ** 3, seed=4)
        assert r1 == r2


# random expression trees for the soundness property
_leaf = st.sampled_from([x, y, const(2), const(Fraction(1, 2)), SymConst("c")])


def _combine(children):
    a, b = children
    return st.sampled_from([a + b, a - b, a * b, a ** 2, Sin(a), Cos(a)])


_expr_trees = st.recursive(
    _leaf, lambda s: st.tuples(s, s).flatmap(_combine), max_leaves=8
)


class TestNormalizeProperty:
    @given(_expr_trees)
    @settings(max_examples=80, deadline=None)
    def test_normalize_preserves_value(self, e):
        rng = random.Random(0)
        back = normalize(e).to_expr()
        names = sorted(free_names(e))
        for _ in range(5):
            valuation = {n: rng.uniform(-2, 2) for n in names}
            a = evaluate(e, valuation)
            b = evaluate(back, valuation)
            assert abs(a - b) <= 1e-7 * (1 + abs(a))


class TestLinearAlgebra:
    def test_solve_simple(self):
        rows = [[Fraction(1), Fraction(1)], [Fraction(1), Fraction(-1)]]
        rhs = [Fraction(3), Fraction(1)]
        assert solve_linear_system(rows, rhs) == [Fraction(2), Fraction(1)]

    def test_inconsistent(self):
        rows = [[Fraction(1)], [Fraction(1)]]
        rhs = [Fraction(0), Fraction(1)]
        assert solve_linear_system(rows, rhs) is None

    def test_rational_combination_ball_energy(self):
        hyp = normalize(const(2) * g * x - const(2) * g * h - v * v).poly
        target = normalize(
            const(2) * g * (g * t ** 2 / const(2) + v * t + x)
            - const(2) * g * h
            - (g * t + v) ** 2
        ).poly
        assert rational_combination(target, [hyp]) == [Fraction(1)]

    def test_rational_combination_fails_cleanly(self):
        hyp = normalize(x + y).poly
        target = normalize(x * y).poly
        assert rational_combination(target, [hyp]) is None
