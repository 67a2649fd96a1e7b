"""Pointwise evaluation, derivatives, and orbit iteration.

Expressions are normalized and compiled once into a flat postfix tape,
then the same tape drives plain evaluation, forward-mode (dual number)
differentiation, and the orbit loop.  Floating overflow is never
silently saturated: any non-finite intermediate raises EvalOverflow,
and the orbit machinery counts it as an escape event.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from enum import Enum

from .expr import (
    Constant,
    Exp,
    MapExpr,
    Negate,
    Product,
    Sum,
    Variable,
    _children,
    normalize,
)


class EvalOverflow(ArithmeticError):
    """A finite input produced a non-finite intermediate or result."""


OP_Z, OP_CONST, OP_ADD, OP_MUL, OP_NEG, OP_EXP = range(6)

Tape = tuple[tuple[int, complex | None], ...]


def compile_tape(expr: MapExpr) -> Tape:
    """Flatten a normalized tree into postfix ops for a stack machine."""
    ops: list[tuple[int, complex | None]] = []
    stack: list[tuple[MapExpr, bool]] = [(expr, False)]
    while stack:
        node, visited = stack.pop()
        if isinstance(node, Variable):
            ops.append((OP_Z, None))
            continue
        if isinstance(node, Constant):
            ops.append((OP_CONST, node.value))
            continue
        if not visited:
            stack.append((node, True))
            for child in reversed(_children(node)):
                stack.append((child, False))
            continue
        if isinstance(node, Sum):
            ops.append((OP_ADD, None))
        elif isinstance(node, Product):
            ops.append((OP_MUL, None))
        elif isinstance(node, Negate):
            ops.append((OP_NEG, None))
        elif isinstance(node, Exp):
            ops.append((OP_EXP, None))
        else:
            raise ValueError(f"cannot compile unnormalized node {type(node).__name__}")
    return tuple(ops)


def _checked(v: complex) -> complex:
    if not cmath.isfinite(v):
        raise EvalOverflow("intermediate value overflowed")
    return v


def run_tape(tape: Tape, z: complex) -> complex:
    stack: list[complex] = []
    for op, arg in tape:
        if op == OP_Z:
            stack.append(z)
        elif op == OP_CONST:
            stack.append(arg)
        elif op == OP_ADD:
            b = stack.pop()
            stack[-1] = _checked(stack[-1] + b)
        elif op == OP_MUL:
            b = stack.pop()
            stack[-1] = _checked(stack[-1] * b)
        elif op == OP_NEG:
            stack[-1] = -stack[-1]
        else:
            try:
                stack[-1] = _checked(cmath.exp(stack[-1]))
            except OverflowError:
                raise EvalOverflow("exp overflowed") from None
    return stack[0]


def run_tape_dual(tape: Tape, z: complex) -> tuple[complex, complex]:
    """Evaluate value and derivative together via dual numbers (v, v')."""
    vals: list[complex] = []
    ders: list[complex] = []
    for op, arg in tape:
        if op == OP_Z:
            vals.append(z)
            ders.append(1.0 + 0j)
        elif op == OP_CONST:
            vals.append(arg)
            ders.append(0j)
        elif op == OP_ADD:
            bv, bd = vals.pop(), ders.pop()
            vals[-1] = _checked(vals[-1] + bv)
            ders[-1] = _checked(ders[-1] + bd)
        elif op == OP_MUL:
            bv, bd = vals.pop(), ders.pop()
            av, ad = vals[-1], ders[-1]
            vals[-1] = _checked(av * bv)
            ders[-1] = _checked(av * bd + ad * bv)
        elif op == OP_NEG:
            vals[-1] = -vals[-1]
            ders[-1] = -ders[-1]
        else:
            try:
                w = _checked(cmath.exp(vals[-1]))
            except OverflowError:
                raise EvalOverflow("exp overflowed") from None
            vals[-1] = w
            ders[-1] = _checked(w * ders[-1])
    return vals[0], ders[0]


def eval_at(expr: MapExpr, z: complex) -> complex:
    """Evaluate expr at z; raises EvalOverflow instead of returning inf/nan."""
    return run_tape(compile_tape(normalize(expr)), complex(z))


def deriv_at(expr: MapExpr, z: complex) -> complex:
    return run_tape_dual(compile_tape(normalize(expr)), complex(z))[1]


# ---------------------------------------------------------------------------
# orbits

@dataclass(frozen=True)
class OrbitParams:
    """Truncated escape semantics: budget, radius, confirmation count."""

    max_iter: int = 200
    escape_radius: float = 1e12
    confirm_count: int = 3

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.escape_radius > 1.0:
            raise ValueError("escape_radius must exceed 1")
        if self.confirm_count < 0:
            raise ValueError("confirm_count must be >= 0")


class OrbitStatus(Enum):
    ESCAPED = "escaped"
    BOUNDED = "bounded-within-budget"
    INDETERMINATE = "indeterminate"


class EscapeTracker:
    """Streaming escape decision over a single modulus sequence.

    An escape is confirmed at the first radius crossing that is followed
    by confirm_count iterates which stay above the radius with
    nondecreasing moduli; a drop below the radius or a modulus decrease
    aborts the pending crossing.  Overflow always decides escape,
    attributed to the live crossing if one is pending.
    """

    def __init__(self, params: OrbitParams):
        self.radius = params.escape_radius
        self.needed = params.confirm_count
        self.chain_start = -1
        self.confirms = 0
        self.prev_mod = 0.0
        self.crossed = False
        self.decided = False
        self.escaped_at: int | None = None

    @property
    def pending(self) -> bool:
        return not self.decided

    def observe(self, modulus: float, n: int) -> None:
        if self.decided:
            return
        if modulus > self.radius:
            self.crossed = True
            if self.chain_start >= 0 and modulus >= self.prev_mod:
                self.confirms += 1
            else:
                self.chain_start = n
                self.confirms = 0
            self.prev_mod = modulus
            if self.confirms >= self.needed:
                self.decided = True
                self.escaped_at = self.chain_start
        else:
            self.chain_start = -1

    def observe_overflow(self, n: int) -> None:
        if self.decided:
            return
        self.decided = True
        self.escaped_at = self.chain_start if self.chain_start >= 0 else n

    def result(self) -> tuple[OrbitStatus, int | None]:
        if self.decided:
            return OrbitStatus.ESCAPED, self.escaped_at
        if self.crossed:
            return OrbitStatus.INDETERMINATE, None
        return OrbitStatus.BOUNDED, None


@dataclass
class OrbitRecord:
    seed: complex
    iterates: list[complex]  # iterates[0] is the seed
    status: OrbitStatus
    escaped_at: int | None
    overflow_at: int | None
    params: OrbitParams = field(repr=False, default=OrbitParams())

    @property
    def final(self) -> complex:
        return self.iterates[-1]

    @property
    def last_step(self) -> float:
        """Modulus of the last orbit step, inf while fewer than two iterates."""
        if len(self.iterates) < 2:
            return float("inf")
        return abs(self.iterates[-1] - self.iterates[-2])


def orbit(expr: MapExpr, seed: complex, params: OrbitParams | None = None) -> OrbitRecord:
    """Iterate expr from seed until escape is confirmed or the budget ends.

    The iterate list stops at the deciding step, so callers see exactly
    the values the decision was based on.
    """
    params = params or OrbitParams()
    tape = compile_tape(normalize(expr))
    tracker = EscapeTracker(params)
    iterates = [complex(seed)]
    overflow_at: int | None = None
    tracker.observe(abs(iterates[0]), 0)
    n = 0
    while tracker.pending and n < params.max_iter:
        n += 1
        try:
            nxt = run_tape(tape, iterates[-1])
        except EvalOverflow:
            overflow_at = n
            tracker.observe_overflow(n)
            break
        iterates.append(nxt)
        tracker.observe(abs(nxt), n)
    status, escaped_at = tracker.result()
    return OrbitRecord(iterates[0], iterates, status, escaped_at, overflow_at, params)
