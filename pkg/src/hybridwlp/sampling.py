"""Rejection sampling of valuations under predicate constraints.

Equality constraints are handled by solving for one name per equation:
linearly when the name occurs linearly, otherwise by bracketing and
bisection on the residual.  Sampling windows widen exponentially when
rejection keeps failing.
"""

from __future__ import annotations

import math
import random
from typing import Callable, Mapping, Optional, Sequence

from .expr import (
    And,
    Cmp,
    EvalError,
    FalsePred,
    Pred,
    Sub,
    TruePred,
    eval_pred,
    evaluate,
    pred_free_names,
)
from .polynorm import NormalizeError, normalize

EQ_CHECK_TOL = 1e-7


def flatten_conj(preds) -> list[Pred]:
    out: list[Pred] = []
    stack = list(preds)
    while stack:
        p = stack.pop()
        if isinstance(p, And):
            stack.append(p.lhs)
            stack.append(p.rhs)
        elif isinstance(p, TruePred):
            continue
        else:
            out.append(p)
    out.reverse()
    return out


def _linear_in(cmp_diff, name: str) -> bool:
    try:
        nf = normalize(cmp_diff)
    except NormalizeError:
        return False
    deg = nf.poly.degree_in(name)
    if deg != 1:
        return False
    # reject powers hiding inside transcendental or opaque atoms
    for atom in nf.poly.atoms():
        if atom.kind in ("sin", "cos", "exp", "div"):
            inner = set()
            for arg in atom.args:
                for a in arg.atoms():
                    inner.add(a.name)
            if name in inner:
                return False
    return True


def _solve_linear(cmp_diff, name: str, valuation: dict) -> Optional[float]:
    # a*name + b = 0 with a, b evaluated at the current partial valuation
    try:
        f0 = evaluate(cmp_diff, {**valuation, name: 0.0})
        f1 = evaluate(cmp_diff, {**valuation, name: 1.0})
    except (EvalError, OverflowError):
        return None
    a = f1 - f0
    if abs(a) < 1e-12:
        return None
    return -f0 / a


def _solve_bisect(cmp_diff, name: str, valuation: dict, width: float) -> Optional[float]:
    def residual(x: float) -> Optional[float]:
        try:
            return evaluate(cmp_diff, {**valuation, name: x})
        except (EvalError, OverflowError):
            return None

    pts = [width * (k / 12.0) for k in range(-12, 13)]
    prev_x, prev_r = None, None
    for x in pts:
        r = residual(x)
        if r is None:
            prev_x, prev_r = None, None
            continue
        if abs(r) < 1e-12:
            return x
        if prev_r is not None and (r < 0) != (prev_r < 0):
            lo, hi, rlo = prev_x, x, prev_r
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                rm = residual(mid)
                if rm is None:
                    return None
                if abs(rm) < 1e-13:
                    return mid
                if (rm < 0) == (rlo < 0):
                    lo, rlo = mid, rm
                else:
                    hi = mid
            return 0.5 * (lo + hi)
        prev_x, prev_r = x, r
    return None


def check_valuation(hyps: Sequence[Pred], valuation: Mapping[str, float],
                    eq_tol: float = EQ_CHECK_TOL) -> bool:
    try:
        return all(eval_pred(h, valuation, eq_tol) for h in hyps)
    except (EvalError, OverflowError):
        return False


def sample_valuation(
    names: Sequence[str],
    hyps: Sequence[Pred],
    rng: random.Random,
    ranges: Mapping[str, tuple] = {},
    attempts: int = 300,
    base_width: float = 10.0,
    eval_constraints: Optional[Callable[[Mapping[str, float]], bool]] = None,
) -> Optional[dict]:
    """One valuation of the given names satisfying all hypotheses, or None.

    ranges may pin per-name sampling intervals; eval_constraints, when
    given, is an extra acceptance check on candidate valuations.
    """
    flat = flatten_conj(hyps)
    if any(isinstance(h, FalsePred) for h in flat):
        return None
    eqs = [h for h in flat if isinstance(h, Cmp) and h.op == "="]
    others = [h for h in flat if h not in eqs]

    # assign one determined name per equality constraint
    plan = []
    determined: set[str] = set()
    for eq in eqs:
        diff = Sub(eq.lhs, eq.rhs)
        eq_names = sorted(pred_free_names(eq) & set(names))
        candidates = [n for n in eq_names if n not in determined]
        if not candidates:
            others.append(eq)
            continue
        linear = [n for n in candidates if _linear_in(diff, n)]
        if linear:
            chosen, how = linear[-1], "linear"
        else:
            chosen, how = candidates[-1], "bisect"
        determined.add(chosen)
        plan.append((diff, chosen, how))

    free = [n for n in names if n not in determined]
    width = base_width
    for attempt in range(attempts):
        if attempt and attempt % 60 == 0 and width < 1e5:
            width *= 2.0
        v: dict = {}
        ok = True
        for n in free:
            lo, hi = ranges.get(n, (-width, width))
            v[n] = rng.uniform(lo, hi)
        for diff, n, how in plan:
            if how == "linear":
                x = _solve_linear(diff, n, v)
            else:
                x = _solve_bisect(diff, n, v, width)
            if x is None:
                ok = False
                break
            lo, hi = ranges.get(n, (-math.inf, math.inf))
            if not (lo - 1e-9 <= x <= hi + 1e-9):
                ok = False
                break
            v[n] = x
        if not ok:
            continue
        if not check_valuation(flat, v):
            continue
        if eval_constraints is not None and not eval_constraints(v):
            continue
        return v
    return None
