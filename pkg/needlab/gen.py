"""
Generators for well-scoped configurations, one-hole contexts and
environments, plus a greedy shrinker for failing cases.

Every case draws from its own random.Random seeded by
(seed, property id, case index), so cases can run in any order or process
and still come out identical.
"""

import logging
import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, FrozenSet, Iterator, List, Optional, Sequence

from . import domain
from .config import GenConfig
from .domain import DomElem, Env, R_ENUM
from .syntax import (
    App,
    Expr,
    Heap,
    Lam,
    Let,
    Name,
    Var,
    binder_list,
    fresh,
    free_vars,
    heap_print,
    print_expr,
    size,
)

logger = logging.getLogger(__name__)

BINDER_BASES = ("a", "b", "c", "d", "f", "g")
HEAP_BASES = ("x", "y", "h", "k")
ENV_BASES = ("r", "s", "t")
HOLE = Name("hole")
MAX_LAM_DEPTH = 2  # Lam tables at rank 4 cost 36 body evaluations per nesting level


def case_rng(seed: int, property_id: str, index: int) -> random.Random:
    return random.Random(f"{seed}:{property_id}:{index}")


class NameSupply:
    """Hands out names that are distinct from everything handed out before."""

    def __init__(self, rng: random.Random, taken: Sequence[Name] = ()):
        self.rng = rng
        self.taken = set(taken) | {HOLE}

    def new(self, bases: Sequence[str]) -> Name:
        name = fresh(self.taken, Name(self.rng.choice(bases)))
        self.taken.add(name)
        return name

    def binder(self) -> Name:
        return self.new(BINDER_BASES)

    def heap_name(self) -> Name:
        return self.new(HEAP_BASES)

    def env_name(self) -> Name:
        return self.new(ENV_BASES)


# =============================================================================
# EXPRESSIONS AND CONTEXTS
# =============================================================================

def gen_expr(
    rng: random.Random, budget: int, scope: Sequence[Name], supply: NameSupply, depth: int = 0
) -> Expr:
    """A random expression of roughly `budget` nodes; free variables come from scope."""
    scope = list(scope)
    if budget <= 1 or rng.random() < 0.15:
        return _leaf(rng, scope, supply)
    kinds = ["let"] + (["lam", "lam"] if depth < MAX_LAM_DEPTH else [])
    if scope:
        kinds += ["app", "app", "app", "var"]
    kind = rng.choice(kinds)
    if kind == "var":
        return Var(rng.choice(scope))
    if kind == "lam":
        x = supply.binder()
        return Lam(x, gen_expr(rng, budget - 1, scope + [x], supply, depth + 1))
    if kind == "app":
        return App(gen_expr(rng, budget - 1, scope, supply, depth), rng.choice(scope))
    count = rng.randint(1, 2) if budget > 3 else 1
    names = [supply.binder() for _ in range(count)]
    inner = scope + names
    share = max(1, (budget - 1) // (count + 1))
    bindings = tuple((n, gen_expr(rng, share, inner, supply, depth)) for n in names)
    return Let(bindings, gen_expr(rng, share, inner, supply, depth))


def _leaf(rng: random.Random, scope: List[Name], supply: NameSupply) -> Expr:
    if scope and rng.random() < 0.6:
        return Var(rng.choice(scope))
    x = supply.binder()
    return Lam(x, Var(rng.choice(scope + [x, x])))


def gen_context(rng: random.Random, budget: int, scope: Sequence[Name], supply: NameSupply) -> Expr:
    """A one-hole context: an expression with exactly one occurrence of Var(HOLE)."""
    scope = list(scope)
    if budget <= 1 or rng.random() < 0.25:
        return Var(HOLE)
    kinds = ["lam", "let_body", "let_rhs"] + (["app"] if scope else [])
    kind = rng.choice(kinds)
    if kind == "lam":
        x = supply.binder()
        return Lam(x, gen_context(rng, budget - 1, scope + [x], supply))
    if kind == "app":
        return App(gen_context(rng, budget - 1, scope, supply), rng.choice(scope))
    n = supply.binder()
    inner = scope + [n]
    if kind == "let_body":
        return Let(((n, gen_expr(rng, 2, inner, supply)),), gen_context(rng, budget - 2, inner, supply))
    return Let(((n, gen_context(rng, budget - 2, inner, supply)),), gen_expr(rng, 2, inner, supply))


def plug(ctx: Expr, e: Expr) -> Expr:
    """Replace the hole of ctx by e (no renaming; contexts never capture)."""
    if isinstance(ctx, Var):
        return e if ctx.name == HOLE else ctx
    if isinstance(ctx, Lam):
        return Lam(ctx.binder, plug(ctx.body, e))
    if isinstance(ctx, App):
        return App(plug(ctx.fun, e), ctx.arg)
    return Let(tuple((n, plug(r, e)) for n, r in ctx.bindings), plug(ctx.body, e))


# =============================================================================
# DOMAIN VALUES
# =============================================================================

def gen_value(rng: random.Random, rank: int, bias: float = 0.4) -> DomElem:
    """A rank element biased toward bot, identities and constant functions."""
    if rank == 0 or rng.random() < bias:
        return domain.bot(rank)
    roll = rng.random()
    if roll < 0.3:
        return domain.identity(rank)
    if roll < 0.6:
        return domain.const(rank, gen_value(rng, rank - 1, bias))
    if rank <= R_ENUM:
        return rng.choice(domain.enumerate_rank(rank)[1:])
    return domain.embed(rng.choice(domain.enumerate_rank(R_ENUM)[1:]))


def gen_env(rng: random.Random, rank: int, names: Sequence[Name], bias: float = 0.4) -> Env:
    return Env.of(rank, {n: gen_value(rng, rank, bias) for n in names})


# =============================================================================
# CONFIGURATIONS
# =============================================================================

@dataclass(frozen=True)
class Config:
    """
    A generated (heap, expression, environment) triple.

    `open_names` may occur free without a heap binding; `extra` carries
    property-specific parameters (chosen names, a second heap, a context).
    """
    heap: Heap
    expr: Expr
    env: Env
    open_names: FrozenSet[Name] = frozenset()
    extra: Dict[str, Any] = field(default_factory=dict, compare=False)

    def weight(self) -> int:
        return size(self.expr) + sum(size(e) for _, e in self.heap) + len(self.env.bindings)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "heap": heap_print(self.heap),
            "expr": print_expr(self.expr),
            "env": self.env.to_json(),
        }
        if self.extra:
            data["extra"] = {k: _jsonable(v) for k, v in sorted(self.extra.items())}
        return data


def _jsonable(value: Any) -> Any:
    if isinstance(value, Expr):
        return print_expr(value)
    if isinstance(value, Heap):
        return heap_print(value)
    if isinstance(value, (Name, DomElem)):
        return str(value)
    if isinstance(value, Env):
        return value.to_json()
    if isinstance(value, (list, tuple, set, frozenset)):
        items = [_jsonable(v) for v in value]
        return sorted(items) if isinstance(value, (set, frozenset)) else items
    return value


def gen_config(
    cfg: GenConfig,
    rng: random.Random,
    *,
    closed: bool = False,
    min_heap: int = 0,
    env_on_heap: bool = False,
    nontrivial_env: bool = False,
    supply: Optional[NameSupply] = None,
) -> Config:
    """
    A well-scoped configuration: distinct heap names, free variables inside
    heap domain plus env names, globally distinct binders disjoint from both.

    closed: no env-only names (expressions mention heap names only)
    env_on_heap: also give heap names environment values
    nontrivial_env: make sure the environment is not all bot
    """
    supply = supply or NameSupply(rng)
    heap_names = [supply.heap_name() for _ in range(rng.randint(min_heap, cfg.max_heap_bindings))]
    env_names = [] if closed else [supply.env_name() for _ in range(rng.randint(0, 2))]
    scope = heap_names + env_names
    half = max(1, cfg.max_expr_size // 2)
    bindings = tuple((n, gen_expr(rng, rng.randint(1, half), scope, supply)) for n in heap_names)
    expr = gen_expr(rng, rng.randint(1, cfg.max_expr_size), scope, supply)
    env_domain = env_names + (heap_names if env_on_heap else [])
    env = gen_env(rng, cfg.rank, env_domain, cfg.env_bias)
    if nontrivial_env and not env.bindings:
        target = rng.choice(env_domain) if env_domain else supply.env_name()
        env = env.set(target, domain.identity(cfg.rank))
    return Config(Heap(bindings), expr, env, frozenset(env_names))


def well_scoped(config: Config) -> List[str]:
    """Problems with a configuration; empty when it is well-scoped."""
    problems = []
    heap_dom = config.heap.domain()
    allowed = heap_dom | config.open_names
    exprs = [config.expr] + [e for _, e in config.heap]
    loose = frozenset().union(*(free_vars(e) for e in exprs)) - allowed
    if loose:
        problems.append(f"unbound names: {', '.join(sorted(map(str, loose)))}")
    binders = [b for e in exprs for b in binder_list(e)]
    if len(set(binders)) != len(binders):
        problems.append("binders are not globally distinct")
    clash = set(binders) & (heap_dom | config.open_names | config.env.dom())
    if clash:
        problems.append(f"binders clash with heap or env names: {', '.join(sorted(map(str, clash)))}")
    return problems


# =============================================================================
# SHRINKING
# =============================================================================

def _subterms(e: Expr) -> Iterator[Expr]:
    if isinstance(e, Lam):
        yield e.body
    elif isinstance(e, App):
        yield e.fun
    elif isinstance(e, Let):
        yield e.body
        for _, r in e.bindings:
            yield r
        if len(e.bindings) > 1:
            for i in range(len(e.bindings)):
                yield Let(e.bindings[:i] + e.bindings[i + 1:], e.body)


def _with_variables(e: Expr, scope: FrozenSet[Name]) -> Iterator[Expr]:
    """e with one non-variable subterm replaced by a variable in scope at that position."""
    if isinstance(e, Var):
        return
    for name in sorted(scope, key=Name.key):
        yield Var(name)
    if isinstance(e, Lam):
        for body in _with_variables(e.body, scope | {e.binder}):
            yield Lam(e.binder, body)
    elif isinstance(e, App):
        for fun in _with_variables(e.fun, scope):
            yield App(fun, e.arg)
    elif isinstance(e, Let):
        inner = scope | set(e.binders)
        for body in _with_variables(e.body, inner):
            yield Let(e.bindings, body)
        for i, (n, r) in enumerate(e.bindings):
            for rhs in _with_variables(r, inner):
                yield Let(e.bindings[:i] + ((n, rhs),) + e.bindings[i + 1:], e.body)


def _candidates(config: Config) -> Iterator[Config]:
    scope = config.heap.domain() | config.open_names
    for n in config.heap.names():
        yield replace(config, heap=config.heap.remove(n))
    for sub in _subterms(config.expr):
        yield replace(config, expr=sub)
    for n, rhs in config.heap:
        for sub in _subterms(rhs):
            yield replace(config, heap=Heap(tuple((m, sub if m == n else r) for m, r in config.heap)))
    for smaller in _with_variables(config.expr, scope):
        yield replace(config, expr=smaller)
    for n, rhs in config.heap:
        for smaller in _with_variables(rhs, scope):
            yield replace(config, heap=Heap(tuple((m, smaller if m == n else r) for m, r in config.heap)))
    for n, _ in config.env.bindings:
        yield replace(config, env=Env(config.env.rank, tuple(b for b in config.env.bindings if b[0] != n)))


def shrink(config: Config, still_fails: Callable[[Config], bool], max_steps: int = 200) -> Config:
    """Greedily replace config by smaller well-scoped variants that still fail."""
    current = config
    for _ in range(max_steps):
        for candidate in _candidates(current):
            if candidate.weight() >= current.weight() or well_scoped(candidate):
                continue
            if still_fails(candidate):
                current = candidate
                break
        else:
            break
    if current is not config:
        logger.debug("Shrunk witness from weight %d to %d", config.weight(), current.weight())
    return current
