"""
Closed-form expressions in t, x, y and named parameters.

Grammar (whitespace is ignored between tokens)::

    expression = term , { ( "+" | "-" ) , term } ;
    term       = unary , { ( "*" | "/" ) , unary } ;
    unary      = ( "-" | "+" ) , unary | power ;
    power      = primary , [ "^" , unary ] ;          (* exponent must be constant *)
    primary    = number | name | function , "(" , expression , ")" | "(" , expression , ")" ;
    function   = "exp" | "sin" | "cos" | "cosh" | "sinh" | "sqrt" ;
    name       = letter , { letter | digit | "_" } ;
    number     = digits , [ "." , [ digits ] ] , [ ( "e" | "E" ) , [ "+" | "-" ] , digits ]
               | "." , digits , [ exponent ] ;

``^`` binds tighter than unary minus and associates to the right, so
``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  The names ``t``, ``x``
and ``y`` are the independent variables; every other name is a parameter.

Trees are immutable and compare structurally.  ``to_string`` prints the fully
parenthesized canonical form that ``parse`` reads back.
"""
import logging
import math
import re
from dataclasses import dataclass
from functools import singledispatch

import numpy as np

from fuzzyheat.errors import EvaluationError, ExpressionSyntaxError
from fuzzyheat.fuzzy import Interval

logger = logging.getLogger(__name__)

VARIABLES = ("t", "x", "y")
FUNCTIONS = ("exp", "sin", "cos", "cosh", "sinh", "sqrt")
UNARY = ("neg",) + FUNCTIONS
BINARY = ("add", "sub", "mul", "div")


class Expression(object):
    """
    Base class of the expression tree

    Operator overloads build raw (unsimplified) nodes; pass the result
    through ``simplify`` to fold it.
    """

    __slots__ = ()

    @staticmethod
    def _wrap(other):
        return other if isinstance(other, Expression) else Const(float(other))

    def __add__(self, other):
        return Binary("add", self, self._wrap(other))

    def __radd__(self, other):
        return Binary("add", self._wrap(other), self)

    def __sub__(self, other):
        return Binary("sub", self, self._wrap(other))

    def __rsub__(self, other):
        return Binary("sub", self._wrap(other), self)

    def __mul__(self, other):
        return Binary("mul", self, self._wrap(other))

    def __rmul__(self, other):
        return Binary("mul", self._wrap(other), self)

    def __truediv__(self, other):
        return Binary("div", self, self._wrap(other))

    def __rtruediv__(self, other):
        return Binary("div", self._wrap(other), self)

    def __neg__(self):
        return Unary("neg", self)

    def __pow__(self, exponent):
        return Pow(self, float(exponent))

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, repr=False)
class Const(Expression):
    value: float

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, repr=False)
class Symbol(Expression):
    name: str

    def __repr__(self):
        return f"Symbol({self.name!r})"


@dataclass(frozen=True, repr=False)
class Unary(Expression):
    func: str
    arg: Expression

    def __repr__(self):
        return f"Unary({self.func!r}, {self.arg!r})"


@dataclass(frozen=True, repr=False)
class Binary(Expression):
    op: str
    left: Expression
    right: Expression

    def __repr__(self):
        return f"Binary({self.op!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Pow(Expression):
    base: Expression
    exponent: float

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent!r})"


ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)
_START = frozenset({"number", "name", "(", "-", "+"})
_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_BP = 25


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


class _Parser(object):
    """ Pratt parser over a token list """

    def __init__(self, text):
        self.text = text
        self.tokens = list(self._tokenize(text))
        self.position = 0

    def _byte_offset(self, index):
        return len(self.text[:index].encode("utf-8"))

    def _tokenize(self, text):
        index = 0
        while True:
            while index < len(text) and text[index].isspace():
                index += 1
            if index >= len(text):
                yield _Token("end", "", self._byte_offset(index))
                return
            match = _TOKEN.match(text, index)
            if match is None or match.end() == index:
                raise ExpressionSyntaxError(
                    f"unexpected character {text[index]!r}", self._byte_offset(index), _START
                )
            kind = match.lastgroup
            value = match.group(kind)
            start = match.start(kind)
            yield _Token(value if kind == "op" else kind, value, self._byte_offset(start))
            index = match.end()

    @property
    def token(self):
        return self.tokens[self.position]

    def advance(self):
        token = self.token
        self.position += 1
        return token

    def expect(self, kind):
        if self.token.kind != kind:
            raise ExpressionSyntaxError(
                f"expected {kind!r} but found {self.token.text or 'end of input'!r}",
                self.token.offset,
                {kind},
            )
        return self.advance()

    def expression(self, rbp=0):
        left = self.nud(self.advance())
        while rbp < _INFIX.get(self.token.kind, 0):
            left = self.led(self.advance(), left)
        return left

    def nud(self, token):
        if token.kind == "number":
            return Const(float(token.text))
        if token.kind == "name":
            if self.token.kind == "(":
                if token.text not in FUNCTIONS:
                    raise ExpressionSyntaxError(
                        f"unknown function {token.text!r}", token.offset, set(FUNCTIONS)
                    )
                self.advance()
                arg = self.expression()
                self.expect(")")
                return Unary(token.text, arg)
            if token.text in FUNCTIONS:
                raise ExpressionSyntaxError(
                    f"function {token.text!r} needs an argument", self.token.offset, {"("}
                )
            return Symbol(token.text)
        if token.kind == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        if token.kind == "-":
            return Unary("neg", self.expression(_UNARY_BP))
        if token.kind == "+":
            return self.expression(_UNARY_BP)
        found = token.text or "end of input"
        raise ExpressionSyntaxError(f"unexpected {found!r}", token.offset, _START)

    def led(self, token, left):
        if token.kind == "^":
            offset = self.token.offset
            exponent = simplify(self.expression(_INFIX["^"] - 1))
            if not isinstance(exponent, Const):
                raise ExpressionSyntaxError("exponent must be a constant", offset, {"number"})
            return Pow(left, exponent.value)
        op = {"+": "add", "-": "sub", "*": "mul", "/": "div"}[token.kind]
        return Binary(op, left, self.expression(_INFIX[token.kind]))


def parse(text):
    """
    Parse infix text into an expression tree.

    Raises
    ------
    ExpressionSyntaxError
        With the byte offset of the offending token and the set of token
        kinds that were expected there
    """
    parser = _Parser(text)
    tree = parser.expression()
    if parser.token.kind != "end":
        raise ExpressionSyntaxError(
            f"unexpected {parser.token.text!r}", parser.token.offset, {"+", "-", "*", "/", "^", "end"}
        )
    return tree


# ---------------------------------------------------------------------------
# printing and inspection
# ---------------------------------------------------------------------------


def _format_number(value):
    if value.is_integer() and abs(value) < 1e15:
        text = str(int(value))
    else:
        text = repr(value)
    return f"({text})" if value < 0 else text


@singledispatch
def to_string(e):
    """ fully parenthesized canonical form """
    raise TypeError(f"not an expression: {e!r}")


@to_string.register(Const)
def _(e):
    return _format_number(e.value)


@to_string.register(Symbol)
def _(e):
    return e.name


@to_string.register(Unary)
def _(e):
    if e.func == "neg":
        return f"(-{to_string(e.arg)})"
    return f"{e.func}({to_string(e.arg)})"


_OP_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


@to_string.register(Binary)
def _(e):
    return f"({to_string(e.left)} {_OP_SYMBOL[e.op]} {to_string(e.right)})"


@to_string.register(Pow)
def _(e):
    return f"({to_string(e.base)} ^ {_format_number(float(e.exponent))})"


def children(e):
    if isinstance(e, Unary):
        return (e.arg,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def free_symbols(e):
    """ names of every symbol (variables and parameters) in the tree """
    found = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Symbol):
            found.add(node.name)
        stack.extend(children(node))
    return frozenset(found)


def parameters(e):
    return free_symbols(e) - set(VARIABLES)


def depends_on(e, symbol):
    return symbol in free_symbols(e)


def node_count(e):
    count = 0
    stack = [e]
    while stack:
        node = stack.pop()
        count += 1
        stack.extend(children(node))
    return count


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

_UNARY_FN = {
    "neg": np.negative,
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "sqrt": np.sqrt,
}
_BINARY_FN = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
}


def _singular(e, exc):
    text = to_string(e)
    return EvaluationError(f"singular evaluation of {text}: {exc}", subexpression=text)


@singledispatch
def _evaluate(e, env):
    raise TypeError(f"not an expression: {e!r}")


@_evaluate.register(Const)
def _(e, env):
    return np.float64(e.value)


@_evaluate.register(Symbol)
def _(e, env):
    try:
        value = env[e.name]
    except KeyError:
        raise EvaluationError(f"unbound symbol {e.name!r}", symbol=e.name) from None
    return np.asarray(value, dtype=float) if np.ndim(value) else np.float64(value)


@_evaluate.register(Unary)
def _(e, env):
    arg = _evaluate(e.arg, env)
    try:
        return _UNARY_FN[e.func](arg)
    except FloatingPointError as exc:
        raise _singular(e, exc) from None


@_evaluate.register(Binary)
def _(e, env):
    left = _evaluate(e.left, env)
    right = _evaluate(e.right, env)
    try:
        return _BINARY_FN[e.op](left, right)
    except (FloatingPointError, ZeroDivisionError) as exc:
        raise _singular(e, exc) from None


@_evaluate.register(Pow)
def _(e, env):
    base = _evaluate(e.base, env)
    try:
        return np.power(base, e.exponent)
    except FloatingPointError as exc:
        raise _singular(e, exc) from None


def evaluate(e, env):
    """
    Evaluate ``e`` with every free symbol bound in ``env``.

    Values in ``env`` may be floats or numpy arrays; arrays broadcast.

    Raises
    ------
    EvaluationError
        For unbound symbols, division by zero, overflow or a domain error,
        naming the offending subexpression
    """
    with np.errstate(divide="raise", invalid="raise", over="raise"):
        value = _evaluate(e, env)
    return float(value) if np.ndim(value) == 0 else value


# ---------------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------------


def _fold(fn, *values):
    with np.errstate(all="raise"):
        try:
            value = float(fn(*values))
        except (FloatingPointError, ZeroDivisionError, OverflowError):
            return None
    return value if math.isfinite(value) else None


def make_unary(func, arg):
    if func == "neg":
        if isinstance(arg, Const):
            return Const(-arg.value)
        if isinstance(arg, Unary) and arg.func == "neg":
            return arg.arg
        if isinstance(arg, Binary) and arg.op == "mul" and isinstance(arg.left, Const):
            return make_mul(Const(-arg.left.value), arg.right)
        if isinstance(arg, Binary) and arg.op == "sub":
            return make_sub(arg.right, arg.left)
        return Unary("neg", arg)
    if isinstance(arg, Const):
        value = _fold(_UNARY_FN[func], arg.value)
        if value is not None:
            return Const(value)
    return Unary(func, arg)


def make_add(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(b, Unary) and b.func == "neg":
        return make_sub(a, b.arg)
    if isinstance(b, Const) and b.value < 0:
        return make_sub(a, Const(-b.value))
    if isinstance(a, Unary) and a.func == "neg":
        return make_sub(b, a.arg)
    return Binary("add", a, b)


def make_sub(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return make_unary("neg", b)
    if isinstance(b, Unary) and b.func == "neg":
        return make_add(a, b.arg)
    return Binary("sub", a, b)


def make_mul(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(b, Const):
        a, b = b, a
    if isinstance(a, Const):
        if a.value == 0.0:
            return ZERO
        if a.value == 1.0:
            return b
        if a.value == -1.0:
            return make_unary("neg", b)
        if isinstance(b, Binary) and b.op == "mul" and isinstance(b.left, Const):
            return make_mul(Const(a.value * b.left.value), b.right)
        if isinstance(b, Unary) and b.func == "neg":
            return make_mul(Const(-a.value), b.arg)
        return Binary("mul", a, b)
    a_neg = isinstance(a, Unary) and a.func == "neg"
    b_neg = isinstance(b, Unary) and b.func == "neg"
    if a_neg and b_neg:
        return make_mul(a.arg, b.arg)
    if a_neg:
        return make_unary("neg", make_mul(a.arg, b))
    if b_neg:
        return make_unary("neg", make_mul(a, b.arg))
    if isinstance(b, Binary) and b.op == "mul" and isinstance(b.left, Const):
        return make_mul(b.left, make_mul(a, b.right))
    if isinstance(a, Binary) and a.op == "mul" and isinstance(a.left, Const):
        return make_mul(a.left, make_mul(a.right, b))
    return Binary("mul", a, b)


def make_div(a, b):
    if isinstance(b, Const):
        if b.value == 0.0:
            return Binary("div", a, b)
        if isinstance(a, Const):
            return Const(a.value / b.value)
        if b.value == 1.0:
            return a
        return make_mul(Const(1.0 / b.value), a)
    # 0/b folds to 0 even where b vanishes
    if _is_const(a, 0.0):
        return ZERO
    return Binary("div", a, b)


def make_pow(base, exponent):
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    if isinstance(base, Const):
        value = _fold(np.power, base.value, exponent)
        if value is not None:
            return Const(value)
    if isinstance(base, Pow) and exponent.is_integer() and float(base.exponent).is_integer():
        return make_pow(base.base, base.exponent * exponent)
    return Pow(base, exponent)


_MAKE_BINARY = {"add": make_add, "sub": make_sub, "mul": make_mul, "div": make_div}


@singledispatch
def simplify(e):
    """
    Semantics-preserving local rewrites: constant folding, identities of
    0 and 1, sign normalization and collection of constant factors.
    """
    raise TypeError(f"not an expression: {e!r}")


@simplify.register(Const)
@simplify.register(Symbol)
def _(e):
    return e


@simplify.register(Unary)
def _(e):
    return make_unary(e.func, simplify(e.arg))


@simplify.register(Binary)
def _(e):
    return _MAKE_BINARY[e.op](simplify(e.left), simplify(e.right))


@simplify.register(Pow)
def _(e):
    return make_pow(simplify(e.base), e.exponent)


def substitute(e, bindings):
    """
    Replace symbols by constants or expressions, then simplify.

    Parameters
    ----------
    bindings : dict
        Symbol name to float or Expression
    """
    replacement = {
        name: value if isinstance(value, Expression) else Const(float(value))
        for name, value in bindings.items()
    }

    def walk(node):
        if isinstance(node, Symbol):
            return replacement.get(node.name, node)
        if isinstance(node, Unary):
            return make_unary(node.func, walk(node.arg))
        if isinstance(node, Binary):
            return _MAKE_BINARY[node.op](walk(node.left), walk(node.right))
        if isinstance(node, Pow):
            return make_pow(walk(node.base), node.exponent)
        return node

    return walk(e)


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------


@singledispatch
def _derivative(e, symbol):
    raise TypeError(f"not an expression: {e!r}")


@_derivative.register(Const)
def _(e, symbol):
    return ZERO


@_derivative.register(Symbol)
def _(e, symbol):
    return ONE if e.name == symbol else ZERO


@_derivative.register(Unary)
def _(e, symbol):
    inner = differentiate(e.arg, symbol)
    if _is_const(inner, 0.0):
        return ZERO
    arg = e.arg
    if e.func == "neg":
        outer = Const(-1.0)
    elif e.func == "exp":
        outer = Unary("exp", arg)
    elif e.func == "sin":
        outer = Unary("cos", arg)
    elif e.func == "cos":
        outer = make_unary("neg", Unary("sin", arg))
    elif e.func == "cosh":
        outer = Unary("sinh", arg)
    elif e.func == "sinh":
        outer = Unary("cosh", arg)
    else:
        outer = make_div(Const(0.5), Unary("sqrt", arg))
    return make_mul(outer, inner)


@_derivative.register(Binary)
def _(e, symbol):
    a, b = e.left, e.right
    da, db = differentiate(a, symbol), differentiate(b, symbol)
    if e.op == "add":
        return make_add(da, db)
    if e.op == "sub":
        return make_sub(da, db)
    if e.op == "mul":
        return make_add(make_mul(da, b), make_mul(a, db))
    # quotient rule, split so a constant denominator stays a scale factor
    first = make_div(da, b)
    if _is_const(db, 0.0):
        return first
    return make_sub(first, make_div(make_mul(a, db), make_pow(b, 2.0)))


@_derivative.register(Pow)
def _(e, symbol):
    inner = differentiate(e.base, symbol)
    if _is_const(inner, 0.0):
        return ZERO
    return make_mul(make_mul(Const(e.exponent), make_pow(e.base, e.exponent - 1.0)), inner)


def differentiate(e, symbol):
    """ exact derivative of ``e`` with respect to ``symbol``, simplified """
    if not depends_on(e, symbol):
        return ZERO
    return _derivative(e, symbol)


# ---------------------------------------------------------------------------
# monomial collection
# ---------------------------------------------------------------------------

_MAX_EXPANSION_POWER = 8


def _atom(e, exponent=1.0):
    e = simplify(e)
    return {to_string(e): (e, float(exponent))}


def _merge(left, right):
    merged = dict(left)
    for key, (base, exponent) in right.items():
        if key in merged:
            total = merged[key][1] + exponent
            if total == 0.0:
                del merged[key]
            else:
                merged[key] = (base, total)
        else:
            merged[key] = (base, exponent)
    return merged


def _times(left_terms, right_terms):
    return [(ca * cb, _merge(fa, fb)) for ca, fa in left_terms for cb, fb in right_terms]


def _terms(e):
    if isinstance(e, Const):
        return [(e.value, {})]
    if isinstance(e, Symbol):
        return [(1.0, {e.name: (e, 1.0)})]
    if isinstance(e, Unary):
        if e.func == "neg":
            return [(-c, f) for c, f in _terms(e.arg)]
        return [(1.0, _atom(e))]
    if isinstance(e, Binary):
        if e.op == "add":
            return _terms(e.left) + _terms(e.right)
        if e.op == "sub":
            return _terms(e.left) + [(-c, f) for c, f in _terms(e.right)]
        if e.op == "mul":
            return _times(_terms(e.left), _terms(e.right))
        denominator = _collect(_terms(e.right))
        if len(denominator) == 1:
            coef, factors = denominator[0]
            if coef != 0.0:
                inverse = {k: (b, -p) for k, (b, p) in factors.items()}
                return _times(_terms(e.left), [(1.0 / coef, inverse)])
        return _times(_terms(e.left), [(1.0, _atom(e.right, -1.0))])
    if isinstance(e, Pow):
        base = _collect(_terms(e.base))
        exponent = float(e.exponent)
        if exponent.is_integer():
            if len(base) == 1:
                coef, factors = base[0]
                if coef != 0.0 or exponent > 0:
                    return [(coef**exponent, {k: (b, p * exponent) for k, (b, p) in factors.items()})]
            elif 0 < exponent <= _MAX_EXPANSION_POWER:
                product = [(1.0, {})]
                for _ in range(int(exponent)):
                    product = _collect(_times(product, base))
                return product
        return [(1.0, _atom(e.base, exponent))]
    raise TypeError(f"not an expression: {e!r}")


def _monomial_key(factors):
    return tuple(sorted((key, exponent) for key, (_, exponent) in factors.items()))


def _collect(terms):
    collected = {}
    for coef, factors in terms:
        key = _monomial_key(factors)
        if key in collected:
            collected[key] = (collected[key][0] + coef, factors)
        else:
            collected[key] = (coef, factors)
    return [(coef, factors) for coef, factors in collected.values() if coef != 0.0]


def _monomial(factors):
    result = ONE
    for key in sorted(factors):
        base, exponent = factors[key]
        result = make_mul(result, make_pow(base, exponent))
    return result


def collect_terms(e):
    """
    Expand ``e`` into a sum of numeric coefficients times canonical monomials.

    Products distribute over sums, integer powers of sums up to the eighth
    are multiplied out, and powers of the same base merge.  Function calls
    are kept whole as atoms.

    Returns
    -------
    list of (float, Expression)
        Coefficient and monomial pairs with distinct monomials
    """
    return [(coef, _monomial(factors)) for coef, factors in _collect(_terms(e))]


def separate(e, symbol):
    """
    Split every collected term of ``e`` into the factors that depend on
    ``symbol`` and those that do not.

    Returns
    -------
    list of (float, Expression, Expression)
        Coefficient, dependent factor and independent factor of each term;
        either factor is ``Const(1)`` when empty
    """
    result = []
    for coef, factors in _collect(_terms(e)):
        dependent = {k: v for k, v in factors.items() if depends_on(v[0], symbol)}
        independent = {k: v for k, v in factors.items() if k not in dependent}
        result.append((coef, _monomial(dependent), _monomial(independent)))
    return result


def expand(e):
    """ ``e`` rewritten as the sum of its collected monomials """
    result = ZERO
    for coef, monomial in collect_terms(e):
        result = make_add(result, make_mul(Const(coef), monomial))
    return result


# ---------------------------------------------------------------------------
# interval extension
# ---------------------------------------------------------------------------


def _periodic_range(lo, hi, fn, peak):
    """ range of sin/cos over [lo, hi]; ``peak`` is the phase of the maximum """
    a, b = fn(lo), fn(hi)
    low, high = np.minimum(a, b), np.maximum(a, b)
    two_pi = 2.0 * np.pi
    has_max = np.floor((hi - peak) / two_pi) >= np.ceil((lo - peak) / two_pi)
    has_min = np.floor((hi - peak - np.pi) / two_pi) >= np.ceil((lo - peak - np.pi) / two_pi)
    return Interval(np.where(has_min, -1.0, low), np.where(has_max, 1.0, high))


def _interval_function(func, arg):
    lo, hi = np.asarray(arg.lo, dtype=float), np.asarray(arg.hi, dtype=float)
    if func == "neg":
        return -arg
    if func in ("exp", "sinh"):
        return Interval(_UNARY_FN[func](lo), _UNARY_FN[func](hi))
    if func == "sqrt":
        if np.any(lo < 0.0):
            raise EvaluationError("sqrt of an interval reaching below zero", subexpression="sqrt")
        return Interval(np.sqrt(lo), np.sqrt(hi))
    if func == "cosh":
        a, b = np.cosh(lo), np.cosh(hi)
        low = np.where((lo <= 0.0) & (hi >= 0.0), 1.0, np.minimum(a, b))
        return Interval(low, np.maximum(a, b))
    if func == "sin":
        return _periodic_range(lo, hi, np.sin, 0.5 * np.pi)
    return _periodic_range(lo, hi, np.cos, 0.0)


def evaluate_interval(e, env):
    """
    Interval extension of ``e``.

    Parameters
    ----------
    env : dict
        Symbol name to ``Interval`` or crisp value

    Returns
    -------
    Interval
        An enclosure of the range of ``e`` over the box ``env``; exact when
        every parameter occurs once
    """
    if isinstance(e, Const):
        return Interval.point(e.value)
    if isinstance(e, Symbol):
        if e.name not in env:
            raise EvaluationError(f"unbound symbol {e.name!r}", symbol=e.name)
        value = env[e.name]
        return value if isinstance(value, Interval) else Interval.point(value)
    if isinstance(e, Unary):
        return _interval_function(e.func, evaluate_interval(e.arg, env))
    if isinstance(e, Binary):
        left, right = evaluate_interval(e.left, env), evaluate_interval(e.right, env)
        if e.op == "add":
            return left + right
        if e.op == "sub":
            return left - right
        if e.op == "mul":
            return left * right
        return left / right
    return evaluate_interval(e.base, env).power(e.exponent)


if __name__ == "__main__":

    g = parse("c*x^2*exp(-g*t)+k*t")
    print("G: {}".format(g))
    print("dG/dg: {}".format(differentiate(g, "g")))
    print("G(t=0.5, x=1): {}".format(evaluate(g, {"c": 2, "g": 1, "k": 1, "t": 0.5, "x": 1})))
