"""Expression trees and a small DSL for entire maps of one complex variable.

The grammar covers sums, products, negation, and ``exp``, plus two
structural forms, ``comp(f, g)`` and ``iter(f, n)``, which are expanded
by substitution before any numerics run.  ``z`` is the only free
variable; ``pi`` and ``e`` are built-in constants; every other name must
be supplied through a binding set at parse time.

Trees are immutable and compare structurally, so normalized expressions
can be used as cache keys.  Literal-only arithmetic is folded into a
single ``Constant`` both at parse time and during normalization, which
is what makes ``parse . format`` the identity on normalized trees.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

MAX_NODES = 10_000

RESERVED_NAMES = frozenset({"z", "exp", "iter", "comp", "pi", "e"})
BUILTIN_CONSTANTS = {"pi": complex(math.pi), "e": complex(math.e)}


class ExprError(ValueError):
    """Base class for expression construction and parsing failures."""


class ParseError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (offset {position})")
        self.message = message
        self.position = position


class UnboundParameterError(ParseError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unbound parameter '{name}'", position)
        self.name = name


class ExpressionTooLarge(ExprError):
    """Normalization would exceed the node budget."""


@dataclass(frozen=True)
class Variable:
    """The free variable z."""


@dataclass(frozen=True)
class Constant:
    value: complex
    name: str | None = None

    def __post_init__(self):
        v = complex(self.value)
        if not cmath.isfinite(v):
            raise ExprError("constant value must be finite")
        # +0.0 canonicalizes away negative zero so equal values format equally
        object.__setattr__(self, "value", complex(v.real + 0.0, v.imag + 0.0))


@dataclass(frozen=True)
class Sum:
    left: "MapExpr"
    right: "MapExpr"


@dataclass(frozen=True)
class Product:
    left: "MapExpr"
    right: "MapExpr"


@dataclass(frozen=True)
class Negate:
    child: "MapExpr"


@dataclass(frozen=True)
class Exp:
    child: "MapExpr"


@dataclass(frozen=True)
class Compose:
    outer: "MapExpr"
    inner: "MapExpr"


@dataclass(frozen=True)
class Iterate:
    child: "MapExpr"
    count: int

    def __post_init__(self):
        if not isinstance(self.count, int) or self.count < 1:
            raise ExprError("iterate count must be an integer >= 1")


MapExpr = Union[Variable, Constant, Sum, Product, Negate, Exp, Compose, Iterate]

_BINARY = (Sum, Product)
_UNARY = (Negate, Exp)


def _children(node: MapExpr) -> tuple[MapExpr, ...]:
    if isinstance(node, _BINARY):
        return (node.left, node.right)
    if isinstance(node, _UNARY):
        return (node.child,)
    if isinstance(node, Compose):
        return (node.outer, node.inner)
    if isinstance(node, Iterate):
        return (node.child,)
    return ()


def _with_children(node: MapExpr, new: tuple[MapExpr, ...]) -> MapExpr:
    old = _children(node)
    if all(a is b for a, b in zip(old, new)):
        return node
    cls = type(node)
    if isinstance(node, _BINARY):
        return cls(new[0], new[1])
    if isinstance(node, _UNARY):
        return cls(new[0])
    if isinstance(node, Compose):
        return Compose(new[0], new[1])
    if isinstance(node, Iterate):
        return Iterate(new[0], node.count)
    return node


def iter_nodes(expr: MapExpr) -> Iterator[MapExpr]:
    """Preorder traversal without recursion (expanded trees can be deep)."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(_children(node))


def node_count(expr: MapExpr) -> int:
    return sum(1 for _ in iter_nodes(expr))


def contains_variable(expr: MapExpr) -> bool:
    return any(isinstance(n, Variable) for n in iter_nodes(expr))


def _rebuild(expr: MapExpr, make_leaf, make_node) -> MapExpr:
    """Iterative post-order reconstruction shared by substitute/normalize."""
    stack: list[tuple[MapExpr, bool]] = [(expr, False)]
    results: list[MapExpr] = []
    while stack:
        node, visited = stack.pop()
        children = _children(node)
        if not visited:
            if not children:
                results.append(make_leaf(node))
            else:
                stack.append((node, True))
                for child in reversed(children):
                    stack.append((child, False))
        else:
            new = tuple(results[len(results) - len(children):])
            del results[len(results) - len(children):]
            results.append(make_node(node, new))
    return results[0]


def substitute(expr: MapExpr, replacement: MapExpr) -> MapExpr:
    """Replace every Variable leaf of expr with replacement (shared, not copied)."""
    return _rebuild(
        expr,
        lambda n: replacement if isinstance(n, Variable) else n,
        _with_children,
    )


def _substitute_folded(expr: MapExpr, replacement: MapExpr) -> MapExpr:
    # substitution can create fresh literal-only subtrees (z + 1 under
    # z -> 6); folding here keeps normalize output fully folded
    return _rebuild(
        expr,
        lambda n: replacement if isinstance(n, Variable) else n,
        lambda node, new: _fold(_with_children(node, new)),
    )


def _fold(node: MapExpr) -> MapExpr:
    """Collapse literal-only arithmetic; named constants are left intact."""
    def lit(n):
        return n.value if isinstance(n, Constant) and n.name is None else None

    if isinstance(node, Sum):
        a, b = lit(node.left), lit(node.right)
        if a is not None and b is not None:
            return _checked_constant(a + b)
    elif isinstance(node, Product):
        a, b = lit(node.left), lit(node.right)
        if a is not None and b is not None:
            return _checked_constant(a * b)
    elif isinstance(node, Negate):
        a = lit(node.child)
        if a is not None:
            return Constant(-a)
    elif isinstance(node, Exp):
        a = lit(node.child)
        if a is not None:
            try:
                return _checked_constant(cmath.exp(a))
            except OverflowError:
                raise ExprError("constant arithmetic overflowed") from None
    return node


def _checked_constant(value: complex) -> Constant:
    if not cmath.isfinite(value):
        raise ExprError("constant arithmetic overflowed")
    return Constant(value)


class _SizeMemo:
    """Node and variable-occurrence counts, memoized by object identity."""

    def __init__(self):
        self.sizes: dict[int, int] = {}
        self.var_counts: dict[int, int] = {}

    def measure(self, expr: MapExpr) -> tuple[int, int]:
        key = id(expr)
        if key in self.sizes:
            return self.sizes[key], self.var_counts[key]
        size = 0
        nvar = 0
        stack = [expr]
        while stack:
            node = stack.pop()
            k = id(node)
            if k in self.sizes:
                size += self.sizes[k]
                nvar += self.var_counts[k]
                continue
            size += 1
            if isinstance(node, Variable):
                nvar += 1
            stack.extend(_children(node))
        self.sizes[key] = size
        self.var_counts[key] = nvar
        return size, nvar


def normalize(expr: MapExpr, max_nodes: int = MAX_NODES) -> MapExpr:
    """Expand Compose/Iterate by substitution and fold literal constants.

    Raises ExpressionTooLarge once the expanded tree would exceed
    max_nodes; the bound is checked before each substitution so a
    runaway iterate fails fast instead of exhausting memory.
    """
    memo = _SizeMemo()

    def guarded_subst(outer: MapExpr, inner: MapExpr) -> MapExpr:
        o_size, o_vars = memo.measure(outer)
        i_size, _ = memo.measure(inner)
        new_size = o_size + o_vars * (i_size - 1)
        if new_size > max_nodes:
            raise ExpressionTooLarge(
                f"normalized expression would have {new_size} nodes (cap {max_nodes})"
            )
        result = _substitute_folded(outer, inner)
        # cached size is the pre-fold bound: an overestimate when folding
        # shrank the tree, which only makes the cap check conservative.
        # Variable counts are exact; folds never touch variable subtrees.
        memo.sizes[id(result)] = new_size
        memo.var_counts[id(result)] = memo.var_counts[id(inner)] * o_vars
        return result

    def make_node(node: MapExpr, children: tuple[MapExpr, ...]) -> MapExpr:
        if isinstance(node, Compose):
            return guarded_subst(children[0], children[1])
        if isinstance(node, Iterate):
            body = children[0]
            result = body
            for _ in range(node.count - 1):
                result = guarded_subst(body, result)
            return result
        return _fold(_with_children(node, children))

    result = _rebuild(expr, lambda n: n, make_node)
    if memo.measure(result)[0] > max_nodes:
        raise ExpressionTooLarge("normalized expression exceeds the node cap")
    return result


def is_transcendental(expr: MapExpr) -> bool:
    """True iff the expanded tree still contains an Exp node."""
    return any(isinstance(n, Exp) for n in iter_nodes(normalize(expr)))


def compose(outer: MapExpr, inner: MapExpr, max_nodes: int = MAX_NODES) -> MapExpr:
    """Normalized composition: eval(compose(f, g), z) == eval(f, eval(g, z))."""
    return normalize(Compose(outer, inner), max_nodes)


def iterate(expr: MapExpr, count: int, max_nodes: int = MAX_NODES) -> MapExpr:
    return normalize(Iterate(expr, count), max_nodes)


def validate_bindings(bindings: Mapping[str, complex]) -> dict[str, complex]:
    out: dict[str, complex] = {}
    for name, value in bindings.items():
        if not name.isidentifier():
            raise ExprError(f"invalid parameter name '{name}'")
        if name in RESERVED_NAMES:
            raise ExprError(f"parameter name '{name}' is reserved")
        v = complex(value)
        if not cmath.isfinite(v):
            raise ExprError(f"parameter '{name}' must be finite")
        out[name] = v
    return out


# ---------------------------------------------------------------------------
# lexer / parser

_SYMBOLS = "+-*(),"


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num' | 'name' | one of _SYMBOLS | 'end'
    text: str
    pos: int
    value: complex = 0j


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _SYMBOLS:
            tokens.append(_Token(c, c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            start = i
            while i < n and text[i].isdigit():
                i += 1
            if i < n and text[i] == ".":
                i += 1
                while i < n and text[i].isdigit():
                    i += 1
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and text[j].isdigit():
                    i = j
                    while i < n and text[i].isdigit():
                        i += 1
            imag = i < n and text[i] == "i"
            if imag:
                i += 1
            mag = float(text[start:i - 1] if imag else text[start:i])
            value = complex(0.0, mag) if imag else complex(mag)
            tokens.append(_Token("num", text[start:i], start, value))
            continue
        if c.isalpha() or c == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            tokens.append(_Token("name", text[start:i], start))
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], bindings: dict[str, complex]):
        self.tokens = tokens
        self.bindings = bindings
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected '{kind}'", tok.pos)
        return self.advance()

    def expr(self) -> MapExpr:
        node = self.term()
        while self.peek().kind in "+-":
            op = self.advance()
            rhs = self.term()
            if op.kind == "-":
                rhs = _fold(Negate(rhs))
            node = _fold(Sum(node, rhs))
        return node

    def term(self) -> MapExpr:
        node = self.factor()
        while self.peek().kind == "*":
            self.advance()
            node = _fold(Product(node, self.factor()))
        return node

    def factor(self) -> MapExpr:
        if self.peek().kind == "-":
            self.advance()
            return _fold(Negate(self.factor()))
        return self.atom()

    def atom(self) -> MapExpr:
        tok = self.advance()
        if tok.kind == "num":
            return Constant(tok.value)
        if tok.kind == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            return self.name_atom(tok)
        raise ParseError(f"expected a value, got {tok.text or 'end of input'!r}", tok.pos)

    def name_atom(self, tok: _Token) -> MapExpr:
        if tok.text == "z":
            return Variable()
        if tok.text == "exp":
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return _fold(Exp(inner))
        if tok.text == "iter":
            self.expect("(")
            body = self.expr()
            self.expect(",")
            count_tok = self.expect("num")
            self.expect(")")
            v = count_tok.value
            if v.imag != 0 or v.real != int(v.real) or int(v.real) < 1:
                raise ParseError("iterate count must be an integer >= 1", count_tok.pos)
            return Iterate(body, int(v.real))
        if tok.text == "comp":
            self.expect("(")
            outer = self.expr()
            self.expect(",")
            inner = self.expr()
            self.expect(")")
            return Compose(outer, inner)
        if tok.text in BUILTIN_CONSTANTS:
            return Constant(BUILTIN_CONSTANTS[tok.text], name=tok.text)
        if tok.text in self.bindings:
            return Constant(self.bindings[tok.text], name=tok.text)
        raise UnboundParameterError(tok.text, tok.pos)


def parse(text: str, bindings: Mapping[str, complex] | None = None) -> MapExpr:
    """Parse DSL source into a tree; Compose/Iterate are kept structural.

    Raises ParseError (with .position) on syntax errors and
    UnboundParameterError for names outside the binding set.
    """
    bound = validate_bindings(bindings or {})
    parser = _Parser(_tokenize(text), bound)
    node = parser.expr()
    tail = parser.peek()
    if tail.kind != "end":
        raise ParseError(f"unexpected trailing input {tail.text!r}", tail.pos)
    return node


# ---------------------------------------------------------------------------
# formatting

_LEVEL_SUM, _LEVEL_PROD, _LEVEL_UNARY, _LEVEL_ATOM = 1, 2, 3, 4


def _format_real(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _format_constant(c: Constant) -> tuple[str, int]:
    if c.name is not None:
        return c.name, _LEVEL_ATOM
    re, im = c.value.real, c.value.imag
    if im == 0:
        body = _format_real(abs(re))
        return (f"-{body}", _LEVEL_UNARY) if re < 0 else (body, _LEVEL_ATOM)
    if re == 0:
        body = _format_real(abs(im)) + "i"
        return (f"-{body}", _LEVEL_UNARY) if im < 0 else (body, _LEVEL_ATOM)
    re_s = _format_real(re)
    im_s = _format_real(abs(im)) + "i"
    return f"{re_s} + {im_s}" if im > 0 else f"{re_s} - {im_s}", _LEVEL_SUM


def _is_negative_literal(node: MapExpr) -> bool:
    if not (isinstance(node, Constant) and node.name is None):
        return False
    re, im = node.value.real, node.value.imag
    return (im == 0 and re < 0) or (re == 0 and im < 0)


def _fmt(node: MapExpr) -> tuple[str, int]:
    if isinstance(node, Variable):
        return "z", _LEVEL_ATOM
    if isinstance(node, Constant):
        return _format_constant(node)
    if isinstance(node, Sum):
        left = _fmt_at(node.left, _LEVEL_SUM)
        right = node.right
        if isinstance(right, Negate):
            return f"{left} - {_fmt_at(right.child, _LEVEL_PROD)}", _LEVEL_SUM
        if _is_negative_literal(right):
            flipped = Constant(-right.value)
            return f"{left} - {_fmt_at(flipped, _LEVEL_PROD)}", _LEVEL_SUM
        return f"{left} + {_fmt_at(right, _LEVEL_PROD)}", _LEVEL_SUM
    if isinstance(node, Product):
        return f"{_fmt_at(node.left, _LEVEL_PROD)}*{_fmt_at(node.right, _LEVEL_UNARY)}", _LEVEL_PROD
    if isinstance(node, Negate):
        return f"-{_fmt_at(node.child, _LEVEL_UNARY)}", _LEVEL_UNARY
    if isinstance(node, Exp):
        return f"exp({_fmt(node.child)[0]})", _LEVEL_ATOM
    raise ExprError(f"cannot format unnormalized node {type(node).__name__}")


def _fmt_at(node: MapExpr, minimum: int) -> str:
    text, level = _fmt(node)
    return f"({text})" if level < minimum else text


def format_expr(expr: MapExpr, max_nodes: int = MAX_NODES) -> str:
    """Render a tree as parseable DSL source (normalizing first)."""
    return _fmt(normalize(expr, max_nodes))[0]
