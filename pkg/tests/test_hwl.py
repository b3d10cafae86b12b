from fractions import Fraction
from pathlib import Path

import pytest

from hybridwlp.expr import And, Const, Var
from hybridwlp.hprog import (
    Assign,
    Choice,
    Evolve,
    EvolFlow,
    IfThenElse,
    Loop,
    NONNEG,
    Seq,
    Skip,
    TimeDomain,
)
from hybridwlp.hwl import ParseError, format_program, format_spec, parse_spec

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"


def parse_program_text(body: str, consts: str = ""):
    header = "problem p vars x v y"
    if consts:
        header += f" consts {consts}"
    text = f"{header} pre x = 0 post x = 0 program {body}"
    return parse_spec(text).program


class TestParsing:
    def test_minimal(self):
        spec = parse_spec("problem p vars x pre x = 0 post x = 0 program skip")
        assert spec.name == "p"
        assert spec.program == Skip()

    def test_precedence_seq_tighter_than_choice(self):
        prog = parse_program_text("x := 1 ; skip ++ abort")
        assert isinstance(prog, Choice)
        assert isinstance(prog.items[0], Seq)

    def test_parens_group(self):
        prog = parse_program_text("x := 1 ; (skip ++ abort)")
        assert isinstance(prog, Seq)
        assert isinstance(prog.items[1], Choice)

    def test_if_branches_are_single_statements(self):
        prog = parse_program_text("if x = 0 then v := 1 else skip ; x := 2")
        assert isinstance(prog, Seq)
        assert isinstance(prog.items[0], IfThenElse)

    def test_evolve_fills_missing_components_with_zero(self):
        prog = parse_program_text("evolve x' = v & true on [0,inf)")
        assert isinstance(prog, Evolve)
        assert prog.field.components["y"] == Const(Fraction(0))
        assert prog.dom == NONNEG

    def test_evolve_flow_completes_identity_components(self):
        prog = parse_program_text(
            "evolve x' = v & true on [0,inf) flow x = x + v*t"
        )
        assert prog.flow.components["v"] == Var("v")

    def test_evolve_guard_can_use_conjunction(self):
        prog = parse_program_text("evolve x' = v & x >= 0 & v >= 0 on R")
        assert isinstance(prog.guard, And)

    def test_evol_flow_command(self):
        prog = parse_program_text("evol x = x + t & true on [0,2]")
        assert isinstance(prog, EvolFlow)
        assert prog.dom == TimeDomain("interval", 0.0, 2.0)

    def test_flow_and_dinv_are_mutually_exclusive(self):
        with pytest.raises(ParseError):
            parse_program_text(
                "evolve x' = v & true on R flow x = x dinv x = 0"
            )

    def test_constant_division_folds(self):
        prog = parse_program_text("x := 1/2")
        assert prog == Assign("x", Const(Fraction(1, 2)))

    def test_unary_minus_on_literal_folds(self):
        prog = parse_program_text("x := -3")
        assert prog == Assign("x", Const(Fraction(-3)))

    def test_decimals_are_exact(self):
        prog = parse_program_text("x := 0.1")
        assert prog == Assign("x", Const(Fraction(1, 10)))

    def test_unknown_identifier_rejected(self):
        with pytest.raises(ParseError) as err:
            parse_spec("problem p vars x pre w = 0 post x = 0 program skip")
        assert "unknown identifier" in str(err.value)

    def test_reserved_time_symbol(self):
        with pytest.raises(ParseError):
            parse_spec("problem p vars t pre t = 0 post t = 0 program skip")

    def test_malformed_ode_position(self):
        with pytest.raises(ParseError) as err:
            parse_spec("problem p vars x pre x = 0 post x = 0 program evolve x' =")
        assert err.value.line == 1

    def test_assignment_to_undeclared_rejected(self):
        with pytest.raises(ParseError):
            parse_program_text("w := 1")

    def test_lemma_block(self):
        spec = parse_spec(
            "problem p vars x consts c\n"
            "pre x = 0 post x = 0 program skip\n"
            "lemma l1: x = 0 & c > 0 => c*x = 0\n"
            "lemma l2: x*x >= 0"
        )
        assert [l.name for l in spec.lemmas] == ["l1", "l2"]
        assert len(spec.lemmas[0].hyps) == 2
        assert spec.lemmas[1].hyps == ()

    def test_config_block(self):
        spec = parse_spec(
            "problem p vars x pre x = 0 post x = 0 program skip\n"
            "config seed 7, step 0.01, trials 500"
        )
        assert spec.config == {"seed": 7, "step": 0.01, "trials": 500}

    def test_const_ranges(self):
        spec = parse_spec(
            "problem p vars x consts a in [-1, 2], b pre x = 0 post x = 0 program skip"
        )
        assert spec.const_ranges == {"a": (-1.0, 2.0)}
        assert spec.consts == ("a", "b")

    def test_comments_ignored(self):
        spec = parse_spec(
            "# leading note\nproblem p vars x # trailing\npre x = 0 post x = 0 program skip"
        )
        assert spec.name == "p"

    def test_pow_requires_natural_literal(self):
        with pytest.raises(ParseError):
            parse_program_text("x := x^v")


class TestRoundTrip:
    @pytest.mark.parametrize("path", sorted(PROBLEMS.glob("*.hwl")))
    def test_shipped_problems(self, path):
        spec = parse_spec(path.read_text())
        printed = format_spec(spec)
        spec2 = parse_spec(printed)
        assert spec2.program == spec.program
        assert spec2.pre == spec.pre and spec2.post == spec.post
        assert spec2.assumptions == spec.assumptions
        assert spec2.vars == spec.vars and spec2.consts == spec.consts
        assert spec2.const_ranges == spec.const_ranges
        for a, b in zip(spec.lemmas, spec2.lemmas):
            assert (a.name, a.hyps, a.concl) == (b.name, b.hyps, b.concl)
        # printing is a fixpoint
        assert format_spec(spec2) == printed

    @pytest.mark.parametrize(
        "body",
        [
            "skip",
            "abort",
            "x := -v + 2*y^3",
            "? x != 0 | !(v < 2)",
            "x := 1 ; v := x ; skip",
            "(x := 1 ++ v := 2) ; skip",
            "if x = 0 & v > 1 then (x := 1 ; v := 2) else skip",
            "loop (x := x + 1 ; ? x <= 3) inv x <= 3",
            "evolve x' = v, v' = -x & x >= 0 on [0,inf) flow x = x*cos(t), v = v",
            "evolve x' = v & true on R dinv x*x <= 1",
            "evol x = x + 2*t, v = v & v >= 0 on [-1,1]",
            "x := 1/3 ; v := x/2 ; y := (x + v)/3",
        ],
    )
    def test_program_fragments(self, body):
        prog = parse_program_text(body)
        printed = format_program(prog)
        assert parse_program_text(printed) == prog


class TestBallFile:
    def test_expected_ast_shape(self):
        spec = parse_spec((PROBLEMS / "bouncing_ball.hwl").read_text())
        assert isinstance(spec.program, Loop)
        body = spec.program.body
        assert isinstance(body, Seq)
        evolve, control = body.items
        assert isinstance(evolve, Evolve)
        assert evolve.flow is not None
        assert isinstance(control, IfThenElse)
        assert spec.consts == ("g", "h")
        assert len(spec.lemmas) == 1


class TestTimeSymbolScope:
    def test_time_allowed_in_flow(self):
        prog = parse_program_text("evolve x' = v & true on R flow x = x + v*t")
        assert prog.flow is not None

    def test_time_rejected_in_assignment(self):
        with pytest.raises(ParseError):
            parse_program_text("x := t")

    def test_time_rejected_in_ode(self):
        with pytest.raises(ParseError):
            parse_program_text("evolve x' = t & true on R")

    def test_time_rejected_in_guard(self):
        with pytest.raises(ParseError):
            parse_program_text("evolve x' = v & x <= t on R")


class TestDomainValidation:
    def test_interval_must_contain_zero(self):
        with pytest.raises(ParseError):
            parse_program_text("evolve x' = v & true on [1,2]")

    def test_two_sided_interval_ok(self):
        prog = parse_program_text("evolve x' = v & true on [-2,3]")
        assert prog.dom == TimeDomain("interval", -2.0, 3.0)


# parser fuzzing: generated expressions survive print/parse
from fractions import Fraction as _F

from hypothesis import given, settings, strategies as st

from hybridwlp.expr import Cos as _Cos, Sin as _Sin, Pow as _Pow

_x, _v, _y = Var("x"), Var("v"), Var("y")
_leaves = st.sampled_from(
    [_x, _v, _y, Const(_F(2)), Const(_F(1, 3)), Const(_F(-5, 2)), Const(_F(0))]
)


def _build(children):
    a, b = children
    return st.sampled_from(
        [a + b, a - b, a * b, _Pow(a, 2), _Sin(a), _Cos(b), -a]
    )


_expr_strategy = st.recursive(_leaves, lambda s: st.tuples(s, s).flatmap(_build), max_leaves=10)


class TestExprRoundTripFuzz:
    @given(_expr_strategy)
    @settings(max_examples=150, deadline=None)
    def test_assignment_round_trip(self, e):
        from hybridwlp.hwl import format_expr

        # the parser folds literal negation/division, so compare through a
        # parse of the original printout
        prog = parse_program_text(f"x := {format_expr(e)}")
        reparsed = parse_program_text(f"x := {format_program(prog).split(':= ', 1)[1]}")
        assert reparsed == prog
