"""Symbolic terms and predicates over hybrid stores.

Expressions are trees over exact rational constants, named symbolic
constants, store variables and a distinguished time symbol ``t``.
Predicates are boolean trees over comparisons of expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Union

TIME_NAME = "t"

Rational = Union[int, Fraction]


class EvalError(Exception):
    """Raised when an expression cannot be evaluated at a valuation."""

    def __init__(self, message: str, subterm: "Expr | None" = None):
        super().__init__(message)
        self.subterm = subterm


def _as_expr(x) -> "Expr":
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    raise TypeError(f"cannot coerce {x!r} to Expr")


@dataclass(frozen=True)
class Expr:
    """Base class for expression nodes. All nodes are immutable."""

    def __add__(self, other):
        return Add(self, _as_expr(other))

    def __radd__(self, other):
        return Add(_as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, _as_expr(other))

    def __rsub__(self, other):
        return Sub(_as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, _as_expr(other))

    def __rmul__(self, other):
        return Mul(_as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return Div(_as_expr(other), self)

    def __pow__(self, n: int):
        return Pow(self, n)

    def __neg__(self):
        return Neg(self)


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class SymConst(Expr):
    name: str


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class TimeVar(Expr):
    """The distinguished time symbol; evaluates under the name ``t``."""


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Sub(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Mul(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Div(Expr):
    num: Expr
    den: Expr

    def __post_init__(self):
        if isinstance(self.den, Const) and self.den.value == 0:
            raise ValueError("division by the constant zero")


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: int

    def __post_init__(self):
        if not isinstance(self.exp, int) or self.exp < 0:
            raise ValueError("Pow exponent must be a natural number")


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(x: Rational) -> Const:
    return Const(Fraction(x))


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Const, SymConst, Var, TimeVar)):
        return ()
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, (Add, Sub, Mul)):
        return (e.lhs, e.rhs)
    if isinstance(e, Div):
        return (e.num, e.den)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, (Sin, Cos, Exp)):
        return (e.arg,)
    raise TypeError(f"not an Expr node: {e!r}")


def subterms(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from subterms(c)


def free_vars(e: Expr) -> set[str]:
    return {s.name for s in subterms(e) if isinstance(s, Var)}


def free_consts(e: Expr) -> set[str]:
    return {s.name for s in subterms(e) if isinstance(s, SymConst)}


def uses_time(e: Expr) -> bool:
    return any(isinstance(s, TimeVar) for s in subterms(e))


def free_names(e: Expr) -> set[str]:
    """All names the expression reads, with the time symbol under ``t``."""
    names = free_vars(e) | free_consts(e)
    if uses_time(e):
        names.add(TIME_NAME)
    return names


def evaluate(e: Expr, valuation: Mapping[str, float]) -> float:
    """Evaluate recursively; unbound names and division by zero raise EvalError."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, (SymConst, Var)):
        try:
            return float(valuation[e.name])
        except KeyError:
            raise EvalError(f"unbound name {e.name!r}", e) from None
    if isinstance(e, TimeVar):
        try:
            return float(valuation[TIME_NAME])
        except KeyError:
            raise EvalError("unbound time symbol 't'", e) from None
    if isinstance(e, Neg):
        return -evaluate(e.arg, valuation)
    if isinstance(e, Add):
        return evaluate(e.lhs, valuation) + evaluate(e.rhs, valuation)
    if isinstance(e, Sub):
        return evaluate(e.lhs, valuation) - evaluate(e.rhs, valuation)
    if isinstance(e, Mul):
        return evaluate(e.lhs, valuation) * evaluate(e.rhs, valuation)
    if isinstance(e, Div):
        den = evaluate(e.den, valuation)
        if den == 0.0:
            raise EvalError("division by zero", e)
        return evaluate(e.num, valuation) / den
    if isinstance(e, Pow):
        return evaluate(e.base, valuation) ** e.exp
    if isinstance(e, Sin):
        return math.sin(evaluate(e.arg, valuation))
    if isinstance(e, Cos):
        return math.cos(evaluate(e.arg, valuation))
    if isinstance(e, Exp):
        try:
            return math.exp(evaluate(e.arg, valuation))
        except OverflowError:
            raise EvalError("exp overflow", e) from None
    raise TypeError(f"not an Expr node: {e!r}")


def is_zero_const(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def diff(e: Expr, wrt: str) -> Expr:
    """Symbolic derivative with respect to a variable name or the time symbol."""
    if isinstance(e, Const) or isinstance(e, SymConst):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == wrt else ZERO
    if isinstance(e, TimeVar):
        return ONE if wrt == TIME_NAME else ZERO
    if isinstance(e, Neg):
        return Neg(diff(e.arg, wrt))
    if isinstance(e, Add):
        return Add(diff(e.lhs, wrt), diff(e.rhs, wrt))
    if isinstance(e, Sub):
        return Sub(diff(e.lhs, wrt), diff(e.rhs, wrt))
    if isinstance(e, Mul):
        return Add(Mul(diff(e.lhs, wrt), e.rhs), Mul(e.lhs, diff(e.rhs, wrt)))
    if isinstance(e, Div):
        du, dv = diff(e.num, wrt), diff(e.den, wrt)
        if is_zero_const(dv):
            return Div(du, e.den)
        return Div(Sub(Mul(du, e.den), Mul(e.num, dv)), Pow(e.den, 2))
    if isinstance(e, Pow):
        if e.exp == 0:
            return ZERO
        return Mul(const(e.exp), Mul(diff(e.base, wrt), Pow(e.base, e.exp - 1)))
    if isinstance(e, Sin):
        return Mul(diff(e.arg, wrt), Cos(e.arg))
    if isinstance(e, Cos):
        return Neg(Mul(diff(e.arg, wrt), Sin(e.arg)))
    if isinstance(e, Exp):
        return Mul(diff(e.arg, wrt), Exp(e.arg))
    raise TypeError(f"not an Expr node: {e!r}")


def substitute(e: Expr, binding: Mapping[str, Expr]) -> Expr:
    """Simultaneous substitution of variables (and ``t``) by expressions."""
    if isinstance(e, Var):
        return binding.get(e.name, e)
    if isinstance(e, TimeVar):
        return binding.get(TIME_NAME, e)
    if isinstance(e, (Const, SymConst)):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, binding))
    if isinstance(e, Add):
        return Add(substitute(e.lhs, binding), substitute(e.rhs, binding))
    if isinstance(e, Sub):
        return Sub(substitute(e.lhs, binding), substitute(e.rhs, binding))
    if isinstance(e, Mul):
        return Mul(substitute(e.lhs, binding), substitute(e.rhs, binding))
    if isinstance(e, Div):
        return Div(substitute(e.num, binding), substitute(e.den, binding))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, binding), e.exp)
    if isinstance(e, Sin):
        return Sin(substitute(e.arg, binding))
    if isinstance(e, Cos):
        return Cos(substitute(e.arg, binding))
    if isinstance(e, Exp):
        return Exp(substitute(e.arg, binding))
    raise TypeError(f"not an Expr node: {e!r}")


def lie_derivative(mu: Expr, field: Mapping[str, Expr]) -> Expr:
    """Directional derivative of mu along the vector field: sum of d(mu)/dx_i * f_i.

    The function mu must be time independent and may only read field variables
    and symbolic constants.
    """
    if uses_time(mu):
        raise ValueError("lie_derivative: expression mentions the time symbol")
    unknown = free_vars(mu) - set(field)
    if unknown:
        raise ValueError(f"lie_derivative: not field variables: {sorted(unknown)}")
    total: Expr = ZERO
    for name in sorted(field):
        d = diff(mu, name)
        if is_zero_const(d):
            continue
        total = Add(total, Mul(d, field[name]))
    return total


# ---------------------------------------------------------------------------
# Predicates


CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")

_NEGATED = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
_SWAPPED = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


@dataclass(frozen=True)
class Pred:
    """Base class for predicate nodes."""


@dataclass(frozen=True)
class TruePred(Pred):
    pass


@dataclass(frozen=True)
class FalsePred(Pred):
    pass


@dataclass(frozen=True)
class Cmp(Pred):
    op: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class And(Pred):
    lhs: Pred
    rhs: Pred


@dataclass(frozen=True)
class Or(Pred):
    lhs: Pred
    rhs: Pred


@dataclass(frozen=True)
class Not(Pred):
    arg: Pred


TRUE = TruePred()
FALSE = FalsePred()


def pred_and(parts: list[Pred]) -> Pred:
    parts = [p for p in parts if not isinstance(p, TruePred)]
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def pred_or(parts: list[Pred]) -> Pred:
    parts = [p for p in parts if not isinstance(p, FalsePred)]
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def implies(p: Pred, q: Pred) -> Pred:
    if isinstance(p, TruePred):
        return q
    return Or(Not(p), q)


def negate_cmp(c: Cmp) -> Cmp:
    return Cmp(_NEGATED[c.op], c.lhs, c.rhs)


def swap_cmp(c: Cmp) -> Cmp:
    return Cmp(_SWAPPED[c.op], c.rhs, c.lhs)


def nnf(p: Pred) -> Pred:
    """Negation normal form: Not is eliminated by flipping comparisons."""
    if isinstance(p, (TruePred, FalsePred, Cmp)):
        return p
    if isinstance(p, And):
        return And(nnf(p.lhs), nnf(p.rhs))
    if isinstance(p, Or):
        return Or(nnf(p.lhs), nnf(p.rhs))
    if isinstance(p, Not):
        q = p.arg
        if isinstance(q, TruePred):
            return FALSE
        if isinstance(q, FalsePred):
            return TRUE
        if isinstance(q, Cmp):
            return negate_cmp(q)
        if isinstance(q, And):
            return Or(nnf(Not(q.lhs)), nnf(Not(q.rhs)))
        if isinstance(q, Or):
            return And(nnf(Not(q.lhs)), nnf(Not(q.rhs)))
        if isinstance(q, Not):
            return nnf(q.arg)
    raise TypeError(f"not a Pred node: {p!r}")


def substitute_pred(p: Pred, binding: Mapping[str, Expr]) -> Pred:
    if isinstance(p, (TruePred, FalsePred)):
        return p
    if isinstance(p, Cmp):
        return Cmp(p.op, substitute(p.lhs, binding), substitute(p.rhs, binding))
    if isinstance(p, And):
        return And(substitute_pred(p.lhs, binding), substitute_pred(p.rhs, binding))
    if isinstance(p, Or):
        return Or(substitute_pred(p.lhs, binding), substitute_pred(p.rhs, binding))
    if isinstance(p, Not):
        return Not(substitute_pred(p.arg, binding))
    raise TypeError(f"not a Pred node: {p!r}")


def compare(op: str, a: float, b: float, eq_tol: float = 0.0) -> bool:
    if op == "=":
        return abs(a - b) <= eq_tol * (1.0 + max(abs(a), abs(b)))
    if op == "!=":
        return not compare("=", a, b, eq_tol)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(f"unknown comparison operator {op!r}")


def eval_pred(p: Pred, valuation: Mapping[str, float], eq_tol: float = 0.0) -> bool:
    """Evaluate a predicate; equality is exact unless eq_tol is given."""
    if isinstance(p, TruePred):
        return True
    if isinstance(p, FalsePred):
        return False
    if isinstance(p, Cmp):
        return compare(p.op, evaluate(p.lhs, valuation), evaluate(p.rhs, valuation), eq_tol)
    if isinstance(p, And):
        return eval_pred(p.lhs, valuation, eq_tol) and eval_pred(p.rhs, valuation, eq_tol)
    if isinstance(p, Or):
        return eval_pred(p.lhs, valuation, eq_tol) or eval_pred(p.rhs, valuation, eq_tol)
    if isinstance(p, Not):
        return not eval_pred(p.arg, valuation, eq_tol)
    raise TypeError(f"not a Pred node: {p!r}")


def pred_atoms(p: Pred) -> Iterator[Cmp]:
    if isinstance(p, Cmp):
        yield p
    elif isinstance(p, (And, Or)):
        yield from pred_atoms(p.lhs)
        yield from pred_atoms(p.rhs)
    elif isinstance(p, Not):
        yield from pred_atoms(p.arg)


def pred_free_names(p: Pred) -> set[str]:
    names: set[str] = set()
    for atom in pred_atoms(p):
        names |= free_names(atom.lhs) | free_names(atom.rhs)
    return names
