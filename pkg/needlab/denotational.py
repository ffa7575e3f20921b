"""
Denotational semantics at a finite rank, in two heap variants.

    ⟦x⟧ρ        = ρ x
    ⟦λx. e⟧ρ    = Fn(λv. ⟦e⟧ρ(x ↦ v))
    ⟦e x⟧ρ      = ⟦e⟧ρ ↓Fn ⟦x⟧ρ
    ⟦let Γ in e⟧ρ = ⟦e⟧(⟦Γ⟧ρ)

    JOIN:   ⟦Γ⟧ρ = μρ'. ρ ⊔ ⟪Γ⟫ρ'
    UPDATE: ⟦Γ⟧ρ = μρ'. ρ + ⟪Γ⟫ρ'     (heap names override ρ)

where ⟪Γ⟫ρ' maps each heap name to the denotation of its right-hand side.
Function arguments live one rank below the function; Lam and App cross the
rank boundary through the embedding-projection pair.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Iterable, Optional, Sequence, Tuple

from . import domain
from .domain import DomElem, Env, R_TABLE, describe, element, env_lub, env_update, lfp_env
from .errors import RankError, ScopeError
from .syntax import App, Expr, Heap, Lam, Let, Name, Var, binder_list, free_vars, rename_binders

logger = logging.getLogger(__name__)


class HeapVariant(str, Enum):
    JOIN = "join"
    UPDATE = "update"


class Denoter:
    """
    Memoizing evaluator of the expression and heap semantics at one rank.

    Expressions handed to `expr_raw` / `heap_raw` must already satisfy the
    binder discipline (see prepare_expr / prepare_heap); the public helpers
    below take care of that.
    """

    def __init__(self, rank: int, variant: HeapVariant = HeapVariant.JOIN):
        if not 1 <= rank <= R_TABLE:
            raise RankError(f"Denotations need a rank in 1..{R_TABLE}, got {rank}")
        self.rank = rank
        self.variant = HeapVariant(variant)
        self._memo: Dict[Tuple[Expr, Env], DomElem] = {}

    # -- expressions ---------------------------------------------------------

    def expr(self, e: Expr, rho: Env) -> DomElem:
        """⟦e⟧ρ, after renaming binders away from dom ρ."""
        self._check_env(rho)
        return self.expr_raw(prepare_expr(e, rho.dom()), rho)

    def expr_raw(self, e: Expr, rho: Env) -> DomElem:
        if isinstance(e, Var):
            return rho(e.name)
        key = (e, rho.restrict_to(free_vars(e)))
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        if isinstance(e, Lam):
            result = domain.fn_make(
                self.rank,
                lambda v: domain.project(self.expr_raw(e.body, rho.set(e.binder, domain.embed(v)))),
            )
        elif isinstance(e, App):
            fun = self.expr_raw(e.fun, rho)
            result = domain.embed(domain.fn_project_apply(fun, domain.project(rho(e.arg))))
        elif isinstance(e, Let):
            result = self.expr_raw(e.body, self.heap_raw(Heap(e.bindings), rho))
        else:
            raise TypeError(f"Not an expression: {e!r}")
        self._memo[key] = result
        return result

    # -- heaps ---------------------------------------------------------------

    def bindings_env(self, heap: Heap, rho: Env) -> Env:
        """⟪Γ⟫ρ: each heap name mapped to its right-hand side's denotation (no fixed point)."""
        return Env.of(self.rank, {x: self.expr_raw(e, rho) for x, e in heap})

    def functional(self, heap: Heap, rho: Env) -> Callable[[Env], Env]:
        """The map ρ' -> ρ ⊔ ⟪Γ⟫ρ' (or ρ + ⟪Γ⟫ρ') whose least fixed point is ⟦Γ⟧ρ."""
        names = heap.domain()
        if self.variant == HeapVariant.JOIN:
            return lambda current: env_lub(rho, self.bindings_env(heap, current))
        return lambda current: env_update(rho, self.bindings_env(heap, current), names)

    def heap(self, heap: Heap, rho: Env) -> Env:
        """⟦Γ⟧ρ, after renaming binders inside Γ away from dom ρ and dom Γ."""
        self._check_env(rho)
        return self.heap_raw(prepare_heap(heap, rho.dom()), rho)

    def heap_raw(self, heap: Heap, rho: Env) -> Env:
        if not len(heap):
            return rho
        return lfp_env(self.functional(heap, rho), self.rank, heap.domain() | rho.dom())

    def _check_env(self, rho: Env) -> None:
        if rho.rank != self.rank:
            raise RankError(f"Environment of rank {rho.rank} given to a rank-{self.rank} denoter")


# =============================================================================
# BINDER DISCIPLINE
# =============================================================================

def prepare_expr(e: Expr, avoid: Iterable[Name]) -> Expr:
    """Make binders pairwise distinct and disjoint from avoid and from e's free variables."""
    avoid = set(avoid)
    binders = binder_list(e)
    if len(set(binders)) == len(binders) and not (set(binders) & (avoid | free_vars(e))):
        return e
    return rename_binders(e, avoid)


def prepare_heap(heap: Heap, avoid: Iterable[Name]) -> Heap:
    """Apply prepare_expr to every right-hand side, keeping binders distinct across the heap."""
    taken = set(avoid) | heap.domain() | heap.free_vars()
    bindings = []
    for x, e in heap:
        renamed = prepare_expr(e, taken)
        taken |= set(binder_list(renamed))
        bindings.append((x, renamed))
    result = Heap(tuple(bindings))
    inner = [b for _, e in result for b in binder_list(e)]
    if len(set(inner)) != len(inner):
        raise ScopeError("Binder renaming failed to make heap binders distinct")
    return result


# =============================================================================
# CONVENIENCE ENTRY POINTS
# =============================================================================

def den_expr(e: Expr, rho: Env, rank: Optional[int] = None, variant: HeapVariant = HeapVariant.JOIN) -> DomElem:
    """⟦e⟧ρ at a rank (default: ρ's rank; ρ is embedded or projected to match)."""
    rank = rho.rank if rank is None else rank
    return Denoter(rank, variant).expr(e, domain.lift_env(rho, rank))


def den_heap(heap: Heap, rho: Env, rank: Optional[int] = None, variant: HeapVariant = HeapVariant.JOIN) -> Env:
    """⟦Γ⟧ρ at a rank."""
    rank = rho.rank if rank is None else rank
    return Denoter(rank, variant).heap(heap, domain.lift_env(rho, rank))


def preceq(
    gamma: Heap,
    rho: Env,
    delta: Heap,
    rho2: Env,
    rank: Optional[int] = None,
    variant: HeapVariant = HeapVariant.JOIN,
) -> bool:
    """⟦Γ⟧ρ ⪯ ⟦Δ⟧ρ': dom Γ ⊆ dom Δ and both heaps agree on dom Γ."""
    if not gamma.domain() <= delta.domain():
        return False
    left = den_heap(gamma, rho, rank, variant)
    right = den_heap(delta, rho2, rank, variant)
    return all(left(x) == right(x) for x in gamma.domain())


# =============================================================================
# OBSERVATION PROTOCOL
# =============================================================================

def observe(u: DomElem, m: int) -> DomElem:
    """Project u down to rank m."""
    if m > u.rank:
        raise RankError(f"Cannot observe a rank-{u.rank} element at higher rank {m}")
    while u.rank > m:
        u = domain.project(u)
    return u


class Verdict(str, Enum):
    EQUAL = "equal"
    NOT_EQUAL = "not_equal"
    INCONCLUSIVE = "inconclusive"


@dataclass
class Comparison:
    """Outcome of den_eq_stable, with the observed sides per rank."""
    verdict: Verdict
    obs_rank: int
    ranks: Tuple[int, ...]
    lhs: Tuple[DomElem, ...]
    rhs: Tuple[DomElem, ...]
    witness: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "verdict": self.verdict.value,
            "obs_rank": self.obs_rank,
            "ranks": list(self.ranks),
            "lhs": [describe(u) for u in self.lhs],
            "rhs": [describe(u) for u in self.rhs],
        }
        if self.witness is not None:
            data["witness"] = self.witness
        return data


def distinguish(u: DomElem, w: DomElem) -> Optional[str]:
    """A human-readable reason why two same-rank elements differ, or None."""
    if u == w:
        return None
    if u.is_bot or w.is_bot:
        return f"{describe(u)} vs {describe(w)}"
    for i, (a, b) in enumerate(zip(u.fn, w.fn)):
        if a != b:
            arg = element(u.rank - 1, i)
            return (
                f"apply to {describe(arg)}: "
                f"{describe(element(u.rank - 1, a))} vs {describe(element(u.rank - 1, b))}"
            )
    return None


def stabilization_ranks(rank: int) -> Tuple[int, int]:
    """The two ranks a rank-level claim is compared at."""
    if rank < R_TABLE:
        return rank, rank + 1
    return R_TABLE - 1, R_TABLE


def den_eq_stable(
    lhs_at: Callable[[int], DomElem],
    rhs_at: Callable[[int], DomElem],
    obs_rank: int,
    ranks: Sequence[int],
    approximates: bool = False,
) -> Comparison:
    """
    Compare two rank-parameterized denotations at the two largest ranks.

    Equal when both sides are stable across the ranks and coincide; NotEqual
    when both are stable and differ at the highest rank; Inconclusive when a
    side still changes between the ranks.

    With approximates=True the left side is known to approach the right side
    from below as the rank grows (every App rounds through embed . project),
    so a stable lhs strictly below rhs is Inconclusive rather than NotEqual.
    """
    chosen = tuple(sorted(set(ranks))[-2:])
    if not chosen or chosen[0] < obs_rank:
        raise RankError(f"Comparison ranks {list(ranks)} must all be >= observation rank {obs_rank}")
    lhs = tuple(observe(lhs_at(r), obs_rank) for r in chosen)
    rhs = tuple(observe(rhs_at(r), obs_rank) for r in chosen)
    stable = len(set(lhs)) == 1 and len(set(rhs)) == 1
    if not stable:
        verdict, witness = Verdict.INCONCLUSIVE, None
    elif lhs[-1] == rhs[-1]:
        verdict, witness = Verdict.EQUAL, None
    elif approximates and domain.leq(lhs[-1], rhs[-1]):
        verdict, witness = Verdict.INCONCLUSIVE, None
    else:
        verdict, witness = Verdict.NOT_EQUAL, distinguish(lhs[-1], rhs[-1])
    logger.debug("den_eq_stable at m=%d ranks=%s: %s", obs_rank, chosen, verdict.value)
    return Comparison(verdict, obs_rank, chosen, lhs, rhs, witness)


def den_eq_settled(
    lhs_at: Callable[[int], DomElem],
    rhs_at: Callable[[int], DomElem],
    obs_rank: int,
    ranks: Sequence[int],
) -> Comparison:
    """
    den_eq_stable for a left side that approximates the right one from below,
    retried at coarser observation ranks (down to 1) while it stays
    Inconclusive. The returned Comparison records the rank that settled it;
    when none does, the Inconclusive comparison at obs_rank comes back.
    """
    first = den_eq_stable(lhs_at, rhs_at, obs_rank, ranks, approximates=True)
    for m in range(obs_rank - 1, 0, -1):
        if first.verdict != Verdict.INCONCLUSIVE:
            break
        cmp = den_eq_stable(lhs_at, rhs_at, m, ranks, approximates=True)
        if cmp.verdict != Verdict.INCONCLUSIVE:
            return cmp
    return first
