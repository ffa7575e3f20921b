"""
Domain - finite rank approximations of Value = (Value -> Value)_bot.

    V0     = {bot}
    V(n+1) = bot below the monotone maps Vn -> Vn, ordered pointwise

Every rank is a finite lattice, so lubs are total and least fixed points are
reached by plain Kleene iteration. A function element stores its table as
canonical enumeration indices at rank - 1; that keeps rank-4 elements cheap
to hash even though rank 4 itself is never enumerated.

Adjacent ranks are connected by embedding-projection pairs:
project(embed(u)) == u and embed(project(w)) <= w.
"""

import itertools
import logging
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, Mapping, Optional, Tuple, Union

from .errors import FixpointError, MonotonicityError, RankError
from .syntax import Name, sorted_names

logger = logging.getLogger(__name__)

R_ENUM = 3          # highest rank whose elements are enumerated
R_TABLE = 4         # highest rank whose tables can be built (keyed by enumerate(R_ENUM))
DEFAULT_RANK = 3


# =============================================================================
# ELEMENTS
# =============================================================================

@dataclass(frozen=True)
class DomElem:
    """bot (fn is None) or Fn(table); table entries are indices into enumerate(rank - 1)."""
    rank: int
    fn: Optional[Tuple[int, ...]] = None

    @property
    def is_bot(self) -> bool:
        return self.fn is None

    def to_json(self) -> Union[str, dict]:
        if self.fn is None:
            return "bot"
        return {"rank": self.rank, "fn": list(self.fn)}

    @classmethod
    def from_json(cls, data: Union[str, dict], rank: int) -> "DomElem":
        if data == "bot":
            return bot(rank)
        if not isinstance(data, dict) or "fn" not in data:
            raise ValueError(f"Not a domain element: {data!r}")
        elem = cls(int(data.get("rank", rank)), tuple(int(i) for i in data["fn"]))
        if elem.rank != rank:
            raise RankError(f"Element of rank {elem.rank} where rank {rank} was expected")
        validate(elem)
        return elem

    def __str__(self) -> str:
        return describe(self)


def bot(rank: int) -> DomElem:
    _check_rank(rank, R_TABLE)
    return DomElem(rank)


def _check_rank(rank: int, limit: int) -> None:
    if not isinstance(rank, int) or rank < 0 or rank > limit:
        raise RankError(f"Rank {rank} outside the supported range 0..{limit}")


# =============================================================================
# ENUMERATED LEVELS
# =============================================================================

class _Level:
    """Everything precomputed for one enumerated rank."""

    def __init__(self, rank: int, elems: Tuple[DomElem, ...], below: "_Level" = None):
        self.rank = rank
        self.elems = elems
        self.index: Dict[DomElem, int] = {u: i for i, u in enumerate(elems)}
        n = len(elems)
        self.leq = tuple(tuple(_leq_tables(elems[i], elems[j], below) for j in range(n)) for i in range(n))
        # strict order pairs, used to check monotonicity of tables over this level
        self.order_pairs = tuple((i, j) for i in range(n) for j in range(n) if i != j and self.leq[i][j])
        self.lub = tuple(tuple(self._lub_index(i, j, below) for j in range(n)) for i in range(n))

    def _lub_index(self, i: int, j: int, below: "_Level") -> int:
        u, w = self.elems[i], self.elems[j]
        if u.fn is None:
            return j
        if w.fn is None:
            return i
        table = tuple(below.lub[a][b] for a, b in zip(u.fn, w.fn))
        return self.index[DomElem(self.rank, table)]


def _leq_tables(u: DomElem, w: DomElem, below: Optional[_Level]) -> bool:
    if u.fn is None:
        return True
    if w.fn is None:
        return False
    return all(below.leq[a][b] for a, b in zip(u.fn, w.fn))


_LEVELS: Dict[int, _Level] = {}
_LEVELS_LOCK = threading.Lock()


def _level(rank: int) -> _Level:
    level = _LEVELS.get(rank)
    if level is not None:
        return level
    _check_rank(rank, R_ENUM)
    with _LEVELS_LOCK:
        for r in range(rank + 1):
            if r not in _LEVELS:
                _LEVELS[r] = _build_level(r)
    return _LEVELS[rank]


def _build_level(rank: int) -> _Level:
    if rank == 0:
        return _Level(0, (DomElem(0),))
    below = _LEVELS[rank - 1]
    n = len(below.elems)
    tables = [
        t for t in itertools.product(range(n), repeat=n)
        if all(below.leq[t[i]][t[j]] for i, j in below.order_pairs)
    ]
    elems = (DomElem(rank),) + tuple(DomElem(rank, t) for t in tables)
    logger.debug("Enumerated rank %d: %d elements", rank, len(elems))
    return _Level(rank, elems, below)


def enumerate_rank(rank: int) -> Tuple[DomElem, ...]:
    """All elements of a rank: bot first, then monotone tables in lexicographic order."""
    return _level(rank).elems


def cardinality(rank: int) -> int:
    return len(_level(rank).elems)


def index_of(u: DomElem) -> int:
    level = _level(u.rank)
    try:
        return level.index[u]
    except KeyError:
        raise MonotonicityError(f"Not a valid rank-{u.rank} element: {u.fn}")


def element(rank: int, index: int) -> DomElem:
    return _level(rank).elems[index]


@lru_cache(maxsize=None)
def height(rank: int) -> int:
    """Length of the longest strict chain at a rank (an upper bound above R_ENUM)."""
    if rank == 0:
        return 0
    return 1 + cardinality(rank - 1) * height(rank - 1)


def validate(u: DomElem) -> None:
    """Raise unless u is a well-formed element (right length, entries in range, monotone)."""
    _check_rank(u.rank, R_TABLE)
    if u.fn is None:
        return
    if u.rank == 0:
        raise RankError("Rank 0 has no function elements")
    below = _level(u.rank - 1)
    if len(u.fn) != len(below.elems) or not all(0 <= i < len(below.elems) for i in u.fn):
        raise RankError(f"Table of length {len(u.fn)} does not fit rank {u.rank}")
    for i, j in below.order_pairs:
        if not below.leq[u.fn[i]][u.fn[j]]:
            raise MonotonicityError(f"Table not monotone at arguments {i} <= {j}: {u.fn}")


def entries(u: DomElem) -> Tuple[DomElem, ...]:
    """Table entries as rank - 1 elements (empty for bot)."""
    if u.fn is None:
        return ()
    elems = _level(u.rank - 1).elems
    return tuple(elems[i] for i in u.fn)


# =============================================================================
# ORDER AND LUB
# =============================================================================

def _same_rank(u: DomElem, w: DomElem) -> None:
    if u.rank != w.rank:
        raise RankError(f"Rank mismatch: {u.rank} vs {w.rank}")


def leq(u: DomElem, w: DomElem) -> bool:
    _same_rank(u, w)
    if u.fn is None:
        return True
    if w.fn is None:
        return False
    if u.rank <= R_ENUM:
        level = _level(u.rank)
        return level.leq[level.index[u]][level.index[w]]
    below = _level(u.rank - 1)
    return all(below.leq[a][b] for a, b in zip(u.fn, w.fn))


def lub(u: DomElem, w: DomElem) -> DomElem:
    _same_rank(u, w)
    if u.fn is None:
        return w
    if w.fn is None:
        return u
    below = _level(u.rank - 1)
    return DomElem(u.rank, tuple(below.lub[a][b] for a, b in zip(u.fn, w.fn)))


def lub_all(rank: int, elems: Iterable[DomElem]) -> DomElem:
    result = bot(rank)
    for u in elems:
        result = lub(result, u)
    return result


# =============================================================================
# FN INJECTION / PROJECTION
# =============================================================================

def fn_project_apply(u: DomElem, a: DomElem) -> DomElem:
    """Apply the function underlying u (rank r) to a (rank r - 1)."""
    if u.rank < 1 or a.rank != u.rank - 1:
        raise RankError(f"Cannot apply rank-{u.rank} element to rank-{a.rank} argument")
    if u.fn is None:
        return DomElem(a.rank)
    level = _level(a.rank)
    return level.elems[u.fn[level.index[a]]]


def fn_make(rank: int, f: Union[Callable[[DomElem], DomElem], Mapping[DomElem, DomElem]]) -> DomElem:
    """Tabulate f over enumerate(rank - 1); raises MonotonicityError for a non-monotone f."""
    _check_rank(rank, R_TABLE)
    if rank < 1:
        raise RankError("Rank 0 has no function elements")
    below = _level(rank - 1)
    lookup = f.__getitem__ if isinstance(f, Mapping) else f
    table = []
    for a in below.elems:
        result = lookup(a)
        if result.rank != rank - 1:
            raise RankError(f"Table entry of rank {result.rank} in a rank-{rank} function")
        table.append(below.index[result])
    for i, j in below.order_pairs:
        if not below.leq[table[i]][table[j]]:
            raise MonotonicityError(
                f"Non-monotone table at rank {rank}: argument {i} <= {j} but results {table[i]}, {table[j]}"
            )
    return DomElem(rank, tuple(table))


def identity(rank: int) -> DomElem:
    return fn_make(rank, lambda a: a)


def const(rank: int, value: DomElem) -> DomElem:
    return fn_make(rank, lambda _: value)


# =============================================================================
# EMBEDDING-PROJECTION PAIRS
# =============================================================================

@lru_cache(maxsize=None)
def embed(u: DomElem) -> DomElem:
    """Rank r -> r + 1: embed(Fn f) = Fn(embed . f . project)."""
    _check_rank(u.rank + 1, R_TABLE)
    if u.fn is None:
        return DomElem(u.rank + 1)
    level = _level(u.rank)
    table = tuple(level.index[embed(fn_project_apply(u, project(a)))] for a in level.elems)
    return DomElem(u.rank + 1, table)


@lru_cache(maxsize=None)
def project(w: DomElem) -> DomElem:
    """Rank r + 1 -> r: project(Fn g) = Fn(project . g . embed); everything projects to bot at rank 0."""
    if w.rank < 1:
        raise RankError("Cannot project below rank 0")
    if w.fn is None or w.rank == 1:
        return DomElem(w.rank - 1)
    level = _level(w.rank - 2)
    table = tuple(_level(w.rank - 2).index[project(fn_project_apply(w, embed(a)))] for a in level.elems)
    return DomElem(w.rank - 1, table)


def convert(u: DomElem, rank: int) -> DomElem:
    """Embed or project u repeatedly until it lives at the given rank."""
    _check_rank(rank, R_TABLE)
    while u.rank < rank:
        u = embed(u)
    while u.rank > rank:
        u = project(u)
    return u


# =============================================================================
# ENVIRONMENTS
# =============================================================================

@dataclass(frozen=True)
class Env:
    """
    Total map Name -> DomElem at one rank; names not listed denote bot.

    Only non-bot bindings are stored (sorted by name), so structural equality
    is semantic equality and the stored names are exactly dom(rho).
    """
    rank: int
    bindings: Tuple[Tuple[Name, DomElem], ...] = ()

    def __post_init__(self):
        _check_rank(self.rank, R_TABLE)
        cleaned = {}
        for n, u in self.bindings:
            if u.rank != self.rank:
                raise RankError(f"Binding {n} has rank {u.rank} in a rank-{self.rank} environment")
            if u.fn is not None:
                cleaned[n] = u
        object.__setattr__(
            self, "bindings", tuple((n, cleaned[n]) for n in sorted_names(cleaned))
        )

    @classmethod
    def of(cls, rank: int, mapping: Optional[Mapping[Name, DomElem]] = None) -> "Env":
        return cls(rank, tuple((mapping or {}).items()))

    @classmethod
    def bottom(cls, rank: int) -> "Env":
        return cls(rank)

    def _map(self) -> Dict[Name, DomElem]:
        cached = self.__dict__.get("_m")
        if cached is None:
            cached = dict(self.bindings)
            object.__setattr__(self, "_m", cached)
        return cached

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_m", None)
        return state

    def __call__(self, name: Name) -> DomElem:
        u = self._map().get(name)
        return u if u is not None else DomElem(self.rank)

    def dom(self) -> frozenset:
        return frozenset(self._map())

    def as_dict(self) -> Dict[Name, DomElem]:
        return dict(self._map())

    def set(self, name: Name, value: DomElem) -> "Env":
        mapping = self.as_dict()
        mapping[name] = value
        return Env.of(self.rank, mapping)

    def restrict_to(self, names: Iterable[Name]) -> "Env":
        """Same as env_restrict; used for memo keys."""
        m = self._map()
        keep = [n for n in names if n in m]
        return Env(self.rank, tuple((n, m[n]) for n in keep))

    def to_json(self) -> dict:
        return {"rank": self.rank, "bindings": {str(n): u.to_json() for n, u in self.bindings}}

    @classmethod
    def from_json(cls, data: dict) -> "Env":
        rank = int(data["rank"])
        mapping = {
            Name.parse(n): DomElem.from_json(u, rank) for n, u in dict(data.get("bindings", {})).items()
        }
        return cls.of(rank, mapping)

    def __str__(self) -> str:
        inner = ", ".join(f"{n} ↦ {describe(u)}" for n, u in self.bindings)
        return "{" + inner + "}"


def _same_env_rank(rho: Env, other: Env) -> None:
    if rho.rank != other.rank:
        raise RankError(f"Environment rank mismatch: {rho.rank} vs {other.rank}")


def env_dom(rho: Env) -> frozenset:
    """Names not mapped to bot."""
    return rho.dom()


def env_lub(rho: Env, other: Env) -> Env:
    _same_env_rank(rho, other)
    names = rho.dom() | other.dom()
    return Env.of(rho.rank, {n: lub(rho(n), other(n)) for n in names})


def env_restrict(rho: Env, names: Iterable[Name]) -> Env:
    """rho|_S"""
    return rho.restrict_to(set(names))


def env_subtract(rho: Env, names: Iterable[Name]) -> Env:
    """rho minus S: rho restricted to the complement of S."""
    drop = set(names)
    return Env(rho.rank, tuple((n, u) for n, u in rho.bindings if n not in drop))


def env_update(rho: Env, other: Env, names: Iterable[Name]) -> Env:
    """Right-sided update: other on names, rho elsewhere."""
    _same_env_rank(rho, other)
    names = set(names)
    mapping = {n: u for n, u in rho.bindings if n not in names}
    mapping.update({n: other(n) for n in names})
    return Env.of(rho.rank, mapping)


def env_leq(rho: Env, other: Env) -> bool:
    """Pointwise order."""
    _same_env_rank(rho, other)
    return all(leq(u, other(n)) for n, u in rho.bindings)


def env_le(rho: Env, other: Env) -> bool:
    """The extension order: rho x != bot implies rho x == other x."""
    _same_env_rank(rho, other)
    return all(other(n) == u for n, u in rho.bindings)


def lift_env(rho: Env, rank: int) -> Env:
    """Move every binding of rho to another rank by embedding or projecting."""
    return Env.of(rank, {n: convert(u, rank) for n, u in rho.bindings})


# =============================================================================
# LEAST FIXED POINTS
# =============================================================================

def kleene(step: Callable[[Env], Env], start: Env, cap: int) -> Tuple[Env, int]:
    """Iterate step from start until it stabilizes; returns (fixed point, applications)."""
    current = start
    for iteration in range(1, cap + 1):
        nxt = step(current)
        if nxt == current:
            return current, iteration
        if not env_leq(current, nxt):
            raise FixpointError(f"Non-monotone functional: iterate {iteration} is not above its predecessor")
        current = nxt
    raise FixpointError(f"Non-monotone functional: no fixed point after {cap} iterations")


def lfp_env(step: Callable[[Env], Env], rank: int, dom_hint: Iterable[Name]) -> Env:
    """Least fixed point of a monotone environment functional, by Kleene iteration from bot."""
    names = set(dom_hint)
    cap = height(rank) * max(1, len(names)) + 2
    result, iterations = kleene(step, Env.bottom(rank), cap)
    logger.debug("lfp at rank %d over %d names: %d iterations", rank, len(names), iterations)
    return result


# =============================================================================
# DISPLAY
# =============================================================================

def describe(u: DomElem, show_table: bool = False) -> str:
    """Human rendering: ⊥, Fn(λ_.c) for constants, Fn(λx.x) for identities, else a table."""
    if u.fn is None:
        return "⊥"
    if show_table:
        return "{" + ", ".join(f"{i} ↦ {j}" for i, j in enumerate(u.fn)) + "}"
    if len(set(u.fn)) == 1:
        return f"Fn(λ_.{describe(element(u.rank - 1, u.fn[0]))})"
    if all(i == j for i, j in enumerate(u.fn)):
        return "Fn(λx.x)"
    return "Fn{" + ", ".join(f"{i} ↦ {j}" for i, j in enumerate(u.fn)) + "}"
