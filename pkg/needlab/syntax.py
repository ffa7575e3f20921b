"""
Syntax - the lazy lambda calculus with variable-argument applications.

    e ::= \\x. e | e x | x | let x1 = e1, ..., xn = en in e

Application arguments are names, never general expressions. A general
application `e1 e2` has to be pre-processed to `let x = e2 in e1 x`
(see desugar_app); the parser does that only on request.

Everything here is immutable. Fresh-name supply is an explicit argument
(an avoid set), so no global state is involved.
"""

import json
import logging
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from .errors import GeneralApplicationError, HeapFormatError, ParseError, ScopeError

logger = logging.getLogger(__name__)

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_SUFFIXED = re.compile(r"^(.*)_(\d+)$")
KEYWORDS = frozenset({"let", "in"})


# =============================================================================
# NAMES
# =============================================================================

@dataclass(frozen=True)
class Name:
    """A variable: identifier text plus an optional fresh-name counter."""
    text: str
    suffix: Optional[int] = None

    def __post_init__(self):
        if not _IDENT.fullmatch(self.text) or self.text in KEYWORDS:
            raise ValueError(f"Invalid identifier: {self.text!r}")
        if _SUFFIXED.match(self.text):
            raise ValueError(f"Identifier text may not end in _<digits>: {self.text!r}")
        if self.suffix is not None and self.suffix < 0:
            raise ValueError(f"Negative name suffix: {self.suffix}")

    @classmethod
    def parse(cls, token: str) -> "Name":
        """Read `x` or `x_3` (the latter carries suffix 3)."""
        match = _SUFFIXED.match(token)
        if match and _IDENT.fullmatch(match.group(1)):
            return cls(match.group(1), int(match.group(2)))
        return cls(token)

    def key(self) -> Tuple[str, int]:
        return (self.text, -1 if self.suffix is None else self.suffix)

    def __str__(self) -> str:
        if self.suffix is None:
            return self.text
        return f"{self.text}_{self.suffix}"


NameSet = FrozenSet[Name]


def sorted_names(names: Iterable[Name]) -> List[Name]:
    return sorted(names, key=Name.key)


def fresh(avoid: Iterable[Name], base: Name) -> Name:
    """Smallest-suffix variant of base.text not in avoid (bare text first)."""
    taken = avoid if isinstance(avoid, (set, frozenset)) else set(avoid)
    candidate = Name(base.text)
    if candidate not in taken:
        return candidate
    n = 1
    while Name(base.text, n) in taken:
        n += 1
    return Name(base.text, n)


# =============================================================================
# EXPRESSIONS
# =============================================================================

class Expr:
    """Base of the four expression constructors."""
    __slots__ = ()

    def _cached_hash(self) -> int:
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self.__dataclass_fields__))
            object.__setattr__(self, "_h", h)
        return h

    def __getstate__(self):
        # cached hashes embed per-process string hashes
        state = dict(self.__dict__)
        state.pop("_h", None)
        state.pop("_fv", None)
        return state

    def __str__(self) -> str:
        return print_expr(self)


@dataclass(frozen=True)
class Var(Expr):
    name: Name

    __hash__ = Expr._cached_hash


@dataclass(frozen=True)
class Lam(Expr):
    binder: Name
    body: Expr

    __hash__ = Expr._cached_hash


@dataclass(frozen=True)
class App(Expr):
    fun: Expr
    arg: Name

    __hash__ = Expr._cached_hash

    def __post_init__(self):
        if not isinstance(self.arg, Name):
            raise TypeError("Application argument must be a Name; use desugar_app for general arguments")


Binding = Tuple[Name, Expr]


@dataclass(frozen=True)
class Let(Expr):
    bindings: Tuple[Binding, ...]
    body: Expr

    __hash__ = Expr._cached_hash

    def __post_init__(self):
        object.__setattr__(self, "bindings", tuple((n, e) for n, e in self.bindings))
        names = [n for n, _ in self.bindings]
        if not names:
            raise ScopeError("let needs at least one binding")
        if len(set(names)) != len(names):
            raise ScopeError(f"Duplicate let binders: {', '.join(map(str, names))}")

    @property
    def binders(self) -> Tuple[Name, ...]:
        return tuple(n for n, _ in self.bindings)


# A syntactic value (WHNF) is always a lambda.
SynValue = Lam


def free_vars(e: Expr) -> NameSet:
    """Free variables; let is recursive, so its binders scope over every right-hand side."""
    cached = e.__dict__.get("_fv")
    if cached is not None:
        return cached
    if isinstance(e, Var):
        result = frozenset({e.name})
    elif isinstance(e, Lam):
        result = free_vars(e.body) - {e.binder}
    elif isinstance(e, App):
        result = free_vars(e.fun) | {e.arg}
    elif isinstance(e, Let):
        inner = free_vars(e.body).union(*(free_vars(rhs) for _, rhs in e.bindings))
        result = inner - set(e.binders)
    else:
        raise TypeError(f"Not an expression: {e!r}")
    object.__setattr__(e, "_fv", result)
    return result


def bound_names(e: Expr) -> NameSet:
    """Every name bound by a lambda or let anywhere inside e."""
    if isinstance(e, Var):
        return frozenset()
    if isinstance(e, Lam):
        return bound_names(e.body) | {e.binder}
    if isinstance(e, App):
        return bound_names(e.fun)
    if isinstance(e, Let):
        return frozenset(e.binders).union(bound_names(e.body), *(bound_names(r) for _, r in e.bindings))
    raise TypeError(f"Not an expression: {e!r}")


def all_names(e: Expr) -> NameSet:
    return free_vars(e) | bound_names(e)


def binder_list(e: Expr) -> List[Name]:
    """Binders in syntactic order, duplicates kept (for distinctness checks)."""
    if isinstance(e, Var):
        return []
    if isinstance(e, Lam):
        return [e.binder] + binder_list(e.body)
    if isinstance(e, App):
        return binder_list(e.fun)
    out = list(e.binders)
    for _, rhs in e.bindings:
        out.extend(binder_list(rhs))
    return out + binder_list(e.body)


def size(e: Expr) -> int:
    if isinstance(e, Var):
        return 1
    if isinstance(e, Lam):
        return 1 + size(e.body)
    if isinstance(e, App):
        return 1 + size(e.fun)
    return 1 + size(e.body) + sum(size(r) for _, r in e.bindings)


# =============================================================================
# SUBSTITUTION
# =============================================================================

def subst(e: Expr, x: Name, y: Name, avoid: Iterable[Name] = ()) -> Expr:
    """
    e[x/y]: replace every free occurrence of y in e by x.

    Binders that would capture x are renamed to names fresh with respect to
    e, x, y and avoid. Returns e itself when y is not free in e.
    """
    if x == y or y not in free_vars(e):
        return e
    taken = set(avoid) | {x, y} | all_names(e)
    return _subst(e, x, y, taken)


def _subst(e: Expr, x: Name, y: Name, taken: set) -> Expr:
    if y not in free_vars(e):
        return e
    if isinstance(e, Var):
        return Var(x)
    if isinstance(e, App):
        return App(_subst(e.fun, x, y, taken), x if e.arg == y else e.arg)
    if isinstance(e, Lam):
        binder, body = e.binder, e.body
        if binder == x:
            renamed = fresh(taken, binder)
            taken.add(renamed)
            body = _subst(body, renamed, binder, taken)
            binder = renamed
        return Lam(binder, _subst(body, x, y, taken))
    # Let; y is free, so y is not among the binders
    bindings = list(e.bindings)
    body = e.body
    if x in e.binders:
        renamed = fresh(taken, x)
        taken.add(renamed)
        bindings = [(renamed if n == x else n, _subst(r, renamed, x, taken)) for n, r in bindings]
        body = _subst(body, renamed, x, taken)
    return Let(
        tuple((n, _subst(r, x, y, taken)) for n, r in bindings),
        _subst(body, x, y, taken),
    )


def rename_binders(e: Expr, avoid: Iterable[Name]) -> Expr:
    """
    Alpha-rename e so its binders are pairwise distinct and disjoint from avoid.

    Free variables are untouched. Binders already distinct and outside avoid
    keep their names.
    """
    taken = set(avoid) | free_vars(e)
    return _rename(e, taken)


def _rename(e: Expr, taken: set) -> Expr:
    if isinstance(e, Var):
        return e
    if isinstance(e, App):
        return App(_rename(e.fun, taken), e.arg)
    if isinstance(e, Lam):
        binder = e.binder
        body = e.body
        if binder in taken:
            binder = fresh(taken | all_names(body), binder)
            body = subst(body, binder, e.binder)
        taken.add(binder)
        return Lam(binder, _rename(body, taken))
    renaming: Dict[Name, Name] = {}
    for n in e.binders:
        if n in taken:
            new = fresh(taken | set(renaming.values()) | all_names(e), n)
            renaming[n] = new
        taken.add(renaming.get(n, n))
    bindings = list(e.bindings)
    body = e.body
    for old, new in renaming.items():
        bindings = [(n, subst(r, new, old)) for n, r in bindings]
        body = subst(body, new, old)
    bindings = [(renaming.get(n, n), r) for n, r in bindings]
    return Let(
        tuple((n, _rename(r, taken)) for n, r in bindings),
        _rename(body, taken),
    )


def desugar_app(fun: Expr, arg: Expr, avoid: Iterable[Name] = ()) -> Expr:
    """Build `fun arg`, pre-processing a non-variable arg to `let a = arg in fun a`."""
    if isinstance(arg, Var):
        return App(fun, arg.name)
    taken = set(avoid) | free_vars(fun) | free_vars(arg)
    x = fresh(taken, Name("a"))
    return Let(((x, arg),), App(fun, x))


# =============================================================================
# ALPHA-EQUIVALENCE
# =============================================================================

def _canon(e: Expr, scope: Dict[Name, int], depth: int) -> tuple:
    """Locally nameless form: bound names become ("b", level), free stay ("f", name)."""
    if isinstance(e, Var):
        return _ref(e.name, scope)
    if isinstance(e, Lam):
        inner = dict(scope)
        inner[e.binder] = depth
        return ("lam", _canon(e.body, inner, depth + 1))
    if isinstance(e, App):
        return ("app", _canon(e.fun, scope, depth), _ref(e.arg, scope))
    inner = dict(scope)
    for i, n in enumerate(e.binders):
        inner[n] = depth + i
    nested = depth + len(e.bindings)
    return (
        "let",
        tuple(_canon(r, inner, nested) for _, r in e.bindings),
        _canon(e.body, inner, nested),
    )


def _ref(name: Name, scope: Dict[Name, int]) -> tuple:
    if name in scope:
        return ("b", scope[name])
    return ("f", name)


def canonical(e: Expr) -> tuple:
    return _canon(e, {}, 0)


def alpha_eq(e1: Expr, e2: Expr) -> bool:
    """Equal up to consistent renaming of lambda and let binders."""
    return e1 is e2 or canonical(e1) == canonical(e2)


def _zip_canon(c1, c2, pairs: List[Tuple[Name, Name]]) -> bool:
    """Compare canonical forms, collecting positions where both hold free names."""
    if isinstance(c1, tuple) and isinstance(c2, tuple):
        if len(c1) == 2 and c1[0] == "f" and c2[0] == "f" and isinstance(c1[1], Name):
            pairs.append((c1[1], c2[1]))
            return True
        if len(c1) != len(c2):
            return False
        return all(_zip_canon(a, b, pairs) for a, b in zip(c1, c2))
    return c1 == c2


def heap_alpha_eq(
    c1: Tuple["Heap", Expr],
    c2: Tuple["Heap", Expr],
    protect: Iterable[Name] = (),
) -> bool:
    """
    True iff a bijection between heap-bound names outside protect makes the
    two (heap, value) configurations coincide up to alpha_eq.
    """
    heap1, value1 = c1
    heap2, value2 = c2
    protect = frozenset(protect)
    d1, d2 = heap1.as_dict(), heap2.as_dict()
    if len(d1) != len(d2):
        return False
    for n in protect:
        if (n in d1) != (n in d2):
            return False
    rename1 = frozenset(d1) - protect
    rename2 = frozenset(d2) - protect
    canon1 = {n: canonical(e) for n, e in d1.items()}
    canon2 = {n: canonical(e) for n, e in d2.items()}

    def extend(pairs, fwd, bwd, agenda) -> bool:
        for a, b in pairs:
            if a in rename1 or b in rename2:
                if a not in rename1 or b not in rename2:
                    return False
                if a in fwd or b in bwd:
                    if fwd.get(a) != b or bwd.get(b) != a:
                        return False
                    continue
                fwd[a] = b
                bwd[b] = a
                agenda.append((a, b))
            elif a != b:
                return False
        return True

    def solve(fwd, bwd, agenda) -> bool:
        while agenda:
            a, b = agenda.pop()
            pairs: List[Tuple[Name, Name]] = []
            if not _zip_canon(canon1[a], canon2[b], pairs):
                return False
            if not extend(pairs, fwd, bwd, agenda):
                return False
        open1 = sorted_names(rename1 - set(fwd))
        if not open1:
            return True
        first = open1[0]
        for candidate in sorted_names(rename2 - set(bwd)):
            f, b = dict(fwd), dict(bwd)
            f[first] = candidate
            b[candidate] = first
            if solve(f, b, [(first, candidate)]):
                return True
        return False

    fwd: Dict[Name, Name] = {}
    bwd: Dict[Name, Name] = {}
    agenda = [(n, n) for n in sorted_names(protect & frozenset(d1))]
    pairs: List[Tuple[Name, Name]] = []
    if not _zip_canon(canonical(value1), canonical(value2), pairs):
        return False
    if not extend(pairs, fwd, bwd, agenda):
        return False
    return solve(fwd, bwd, agenda)


# =============================================================================
# HEAPS
# =============================================================================

@dataclass(frozen=True)
class Heap:
    """Ordered name -> expression bindings; order only affects iteration and printing."""
    bindings: Tuple[Binding, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bindings", tuple((n, e) for n, e in self.bindings))
        names = [n for n, _ in self.bindings]
        if len(set(names)) != len(names):
            raise ScopeError(f"Duplicate heap names: {', '.join(map(str, names))}")

    @classmethod
    def of(cls, *pairs: Binding) -> "Heap":
        return cls(tuple(pairs))

    def names(self) -> Tuple[Name, ...]:
        return tuple(n for n, _ in self.bindings)

    def domain(self) -> NameSet:
        return frozenset(self.names())

    def get(self, name: Name) -> Optional[Expr]:
        for n, e in self.bindings:
            if n == name:
                return e
        return None

    def __contains__(self, name: object) -> bool:
        return any(n == name for n, _ in self.bindings)

    def __len__(self) -> int:
        return len(self.bindings)

    def __iter__(self) -> Iterator[Binding]:
        return iter(self.bindings)

    def remove(self, name: Name) -> "Heap":
        return Heap(tuple((n, e) for n, e in self.bindings if n != name))

    def extend(self, pairs: Iterable[Binding]) -> "Heap":
        return Heap(self.bindings + tuple(pairs))

    def as_dict(self) -> Dict[Name, Expr]:
        return dict(self.bindings)

    def same_bindings(self, other: "Heap") -> bool:
        return self.as_dict() == other.as_dict()

    def all_names(self) -> NameSet:
        return self.domain().union(*(all_names(e) for _, e in self.bindings))

    def free_vars(self) -> NameSet:
        """Names used by the right-hand sides but not bound by the heap."""
        return frozenset().union(*(free_vars(e) for _, e in self.bindings)) - self.domain()

    def to_dict(self) -> dict:
        return {"bindings": [[str(n), print_expr(e)] for n, e in self.bindings]}

    @classmethod
    def from_dict(cls, data: dict) -> "Heap":
        try:
            pairs = [(Name.parse(str(n)), parse(str(src))) for n, src in data["bindings"]]
        except (KeyError, TypeError, ValueError) as e:
            raise HeapFormatError(f"Malformed heap JSON: {e}")
        return cls(tuple(pairs))

    def __str__(self) -> str:
        return heap_print(self)


# =============================================================================
# PRINTING
# =============================================================================

def print_expr(e: Expr) -> str:
    """Concrete syntax; parse(print_expr(e)) == e."""
    if isinstance(e, Var):
        return str(e.name)
    if isinstance(e, Lam):
        return f"\\{e.binder}. {print_expr(e.body)}"
    if isinstance(e, App):
        fun = print_expr(e.fun)
        if isinstance(e.fun, (Lam, Let)):
            fun = f"({fun})"
        return f"{fun} {e.arg}"
    binds = ", ".join(f"{n} = {print_expr(r)}" for n, r in e.bindings)
    return f"let {binds} in {print_expr(e.body)}"


def heap_print(heap: Heap) -> str:
    return "{" + ", ".join(f"{n} = {print_expr(e)}" for n, e in heap.bindings) + "}"


# =============================================================================
# PARSING
# =============================================================================

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<comment>#[^\n]*)|(?P<lam>\\|λ)|(?P<punct>[().=,;])|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match:
            raise ParseError(f"Unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup
        if kind == "ident" and match.group() in KEYWORDS:
            kind = "kw"
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class Parser:
    """
    Recursive-descent parser for the concrete grammar.

    With desugar=True, general applications are rewritten with desugar_app
    and counted in `desugared`; otherwise they raise GeneralApplicationError.
    """

    def __init__(self, text: str, desugar: bool = False):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0
        self.desugar = desugar
        self.desugared = 0
        self._avoid = set()
        for t in self.tokens:
            if t.kind == "ident":
                try:
                    self._avoid.add(Name.parse(t.text))
                except ValueError:
                    pass

    @property
    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        token = self.peek
        if token.kind != kind or (text is not None and token.text != text):
            wanted = text or kind
            got = token.text or "end of input"
            raise ParseError(f"Expected {wanted!r} but found {got!r}", token.pos)
        return self.advance()

    def name(self) -> Name:
        token = self.expect("ident")
        try:
            return Name.parse(token.text)
        except ValueError as e:
            raise ParseError(str(e), token.pos)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek.kind != "eof":
            raise ParseError(f"Unexpected {self.peek.text!r}", self.peek.pos)
        return e

    def expr(self) -> Expr:
        token = self.peek
        if token.kind == "lam":
            self.advance()
            binders = [self.name()]
            while self.peek.kind == "ident":
                binders.append(self.name())
            self.expect("punct", ".")
            body = self.expr()
            for b in reversed(binders):
                body = Lam(b, body)
            return body
        if token.kind == "kw" and token.text == "let":
            return self.let()
        return self.application()

    def let(self) -> Expr:
        start = self.expect("kw", "let").pos
        bindings = [self.binding()]
        while self.peek.kind == "punct" and self.peek.text in (",", ";"):
            self.advance()
            bindings.append(self.binding())
        self.expect("kw", "in")
        body = self.expr()
        try:
            return Let(tuple(bindings), body)
        except ScopeError as e:
            raise ParseError(str(e), start)

    def binding(self) -> Binding:
        n = self.name()
        self.expect("punct", "=")
        return (n, self.expr())

    def application(self) -> Expr:
        head = self.atom()
        while True:
            token = self.peek
            if token.kind == "ident":
                head = App(head, self.name())
            elif token.kind == "punct" and token.text == "(":
                arg = self.atom()
                head = self.apply(head, arg, token.pos)
            elif token.kind == "lam" or (token.kind == "kw" and token.text == "let"):
                arg = self.expr()
                return self.apply(head, arg, token.pos)
            else:
                return head

    def apply(self, fun: Expr, arg: Expr, pos: int) -> Expr:
        if isinstance(arg, Var):
            return App(fun, arg.name)
        if not self.desugar:
            raise GeneralApplicationError(
                "General application: the argument must be a variable; "
                f"`e1 ({print_expr(arg)})` must be pre-processed to `let x = {print_expr(arg)} in e1 x`",
                pos,
            )
        self.desugared += 1
        result = desugar_app(fun, arg, self._avoid)
        self._avoid |= all_names(result)
        return result

    def atom(self) -> Expr:
        token = self.peek
        if token.kind == "ident":
            return Var(self.name())
        if token.kind == "punct" and token.text == "(":
            self.advance()
            inner = self.expr()
            self.expect("punct", ")")
            return inner
        got = token.text or "end of input"
        raise ParseError(f"Expected an expression but found {got!r}", token.pos)


def parse(text: str, desugar: bool = False) -> Expr:
    return Parser(text, desugar=desugar).parse()


def parse_heap(text: str, desugar: bool = False) -> Heap:
    """
    Read a heap file: either JSON {"bindings": [["x", "<expr>"], ...]} or one
    `name = expr` per line, with `#` comments.
    """
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise HeapFormatError(f"Invalid heap JSON: {e}")
        return Heap.from_dict(data)
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise HeapFormatError(f"Line {lineno}: expected `name = expr`")
        lhs, rhs = line.split("=", 1)
        try:
            pairs.append((Name.parse(lhs.strip()), parse(rhs, desugar=desugar)))
        except (ParseError, ValueError) as e:
            raise HeapFormatError(f"Line {lineno}: {e}")
    try:
        return Heap(tuple(pairs))
    except ScopeError as e:
        raise HeapFormatError(str(e))
