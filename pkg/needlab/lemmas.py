"""
Heap-semantics lemmas as executable properties.

Each lemma is pure fixed-point and lattice algebra, so it holds exactly at
every finite rank. A property generates a case from its own RNG and checks
the statement at ranks rank - 1 and rank; cases whose hypotheses fail are
reported as skipped.
"""

import logging
import random
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Iterable, Optional, Tuple

from . import domain
from .config import GenConfig
from .denotational import Denoter, HeapVariant, preceq, prepare_heap
from .domain import Env, env_leq, env_lub, env_subtract, env_update, lfp_env, lift_env, lub
from .gen import Config, NameSupply, gen_config, gen_context, gen_env, gen_expr, plug
from .syntax import App, Heap, Let, Name, Var, free_vars, subst

logger = logging.getLogger(__name__)

JOIN = HeapVariant.JOIN
UPDATE = HeapVariant.UPDATE


class CaseStatus(str, Enum):
    PASSED = "passed"
    FAILED = "failed"
    INCONCLUSIVE = "inconclusive"
    SKIPPED = "skipped"


@dataclass
class CaseResult:
    """Outcome of checking one generated case."""
    status: CaseStatus
    lhs: Optional[str] = None
    rhs: Optional[str] = None
    detail: str = ""

    @classmethod
    def passed(cls) -> "CaseResult":
        return cls(CaseStatus.PASSED)

    @classmethod
    def skipped(cls, detail: str = "") -> "CaseResult":
        return cls(CaseStatus.SKIPPED, detail=detail)

    @classmethod
    def failed(cls, lhs: Any, rhs: Any, detail: str) -> "CaseResult":
        return cls(CaseStatus.FAILED, str(lhs), str(rhs), detail)

    @classmethod
    def inconclusive(cls, detail: str = "") -> "CaseResult":
        return cls(CaseStatus.INCONCLUSIVE, detail=detail)

    @property
    def is_failure(self) -> bool:
        return self.status == CaseStatus.FAILED


class Property:
    """A generated-input property: generate a case, check it."""
    property_id: str = ""
    description: str = ""
    conditional: bool = False   # non-vacuous quota applies

    def generate(self, cfg: GenConfig, rng: random.Random) -> Config:
        raise NotImplementedError

    def check(self, case: Config, cfg: GenConfig) -> CaseResult:
        raise NotImplementedError

    def admits(self, case: Config) -> bool:
        """Whether case still meets the hypotheses generate() guarantees; shrinking keeps only such cases."""
        return True


def lemma_ranks(rank: int) -> Tuple[int, ...]:
    return tuple(sorted({max(1, rank - 1), rank}))


class LemmaProperty(Property):
    """A lemma checked exactly at ranks rank - 1 and rank."""

    def __init__(
        self,
        property_id: str,
        description: str,
        generator: Callable[[GenConfig, random.Random], Config],
        check_at: Callable[[Config, int], CaseResult],
    ):
        self.property_id = property_id
        self.description = description
        self.conditional = True
        self._generator = generator
        self._check_at = check_at

    def generate(self, cfg: GenConfig, rng: random.Random) -> Config:
        return self._generator(cfg, rng)

    def check(self, case: Config, cfg: GenConfig) -> CaseResult:
        outcomes = []
        for r in lemma_ranks(cfg.rank):
            result = self._check_at(case, r)
            if result.is_failure:
                result.detail = f"rank {r}: {result.detail}"
                return result
            outcomes.append(result)
        if all(o.status == CaseStatus.SKIPPED for o in outcomes):
            return outcomes[-1]
        return CaseResult.passed()


LEMMAS: Dict[str, LemmaProperty] = {}


def lemma(property_id: str, description: str, generator: Callable[[GenConfig, random.Random], Config]):
    def register(check_at: Callable[[Config, int], CaseResult]):
        LEMMAS[property_id] = LemmaProperty(property_id, description, generator, check_at)
        return check_at
    return register


def _expect_equal(lhs, rhs, detail: str) -> CaseResult:
    if lhs == rhs:
        return CaseResult.passed()
    return CaseResult.failed(lhs, rhs, detail)


def _expect_below(lhs: Env, rhs: Env, detail: str) -> CaseResult:
    if env_leq(lhs, rhs):
        return CaseResult.passed()
    return CaseResult.failed(lhs, rhs, detail)


def _first_failure(results: Iterable[CaseResult]) -> CaseResult:
    for result in results:
        if result.status != CaseStatus.PASSED:
            return result
    return CaseResult.passed()


# =============================================================================
# GENERATORS
# =============================================================================

def _heap_with_env(cfg: GenConfig, rng: random.Random) -> Config:
    """Non-empty heap; environment over heap names and extra names."""
    return gen_config(cfg, rng, min_heap=1, env_on_heap=True)


def _with_noise(cfg: GenConfig, rng: random.Random) -> Config:
    supply = NameSupply(rng)
    case = gen_config(cfg, rng, min_heap=1, env_on_heap=True, supply=supply)
    names = sorted(case.heap.domain() | case.open_names, key=Name.key)
    mode = rng.choice(["above_heap", "arbitrary"])
    noise = gen_env(rng, cfg.rank, names, cfg.env_bias)
    return Config(case.heap, case.expr, case.env, case.open_names, {"noise": noise, "mode": mode})


def _binding_pair(cfg: GenConfig, rng: random.Random) -> Config:
    supply = NameSupply(rng)
    case = gen_config(cfg, rng, supply=supply)
    x = supply.heap_name()
    scope = sorted(case.heap.domain() | case.open_names | {x}, key=Name.key)
    e1 = gen_expr(rng, rng.randint(1, cfg.max_expr_size), scope, supply)
    mode = rng.choice(["indirection", "bottom", "random"])
    if mode == "indirection":
        q = supply.binder()
        e2 = Let(((q, e1),), Var(q))
    elif mode == "bottom":
        e2 = e1
        b = supply.binder()
        e1 = Let(((b, Var(b)),), Var(b))
    else:
        e2 = gen_expr(rng, rng.randint(1, cfg.max_expr_size), scope, supply)
    return Config(case.heap, e1, case.env, case.open_names, {"x": x, "e1": e1, "e2": e2, "mode": mode})


def _context_case(cfg: GenConfig, rng: random.Random) -> Config:
    supply = NameSupply(rng)
    case = gen_config(cfg, rng, env_on_heap=True, supply=supply)
    y, z = supply.heap_name(), supply.heap_name()
    scope = sorted(case.heap.domain() | case.open_names | {y, z}, key=Name.key)
    e = gen_expr(rng, rng.randint(1, cfg.max_expr_size // 2 or 1), scope, supply)
    ctx = gen_context(rng, rng.randint(1, cfg.max_expr_size // 2 or 1), scope, supply)
    return Config(case.heap, e, case.env, case.open_names, {"y": y, "z": z, "context": ctx})


def _split_heap(cfg: GenConfig, rng: random.Random) -> Config:
    case = gen_config(cfg, rng, min_heap=1)
    names = list(case.heap.names())
    gamma = frozenset(n for n in names if rng.random() < 0.5) or frozenset(names[:1])
    return Config(case.heap, case.expr, Env.bottom(cfg.rank), case.open_names, {"gamma": gamma})


def _fresh_set(cfg: GenConfig, rng: random.Random) -> Config:
    supply = NameSupply(rng)
    case = gen_config(cfg, rng, env_on_heap=True, supply=supply)
    unused = [supply.env_name() for _ in range(rng.randint(0, 2))]
    env = case.env
    for n in unused:
        env = env.set(n, domain.identity(cfg.rank) if rng.random() < 0.7 else domain.bot(cfg.rank))
    candidates = sorted((env.dom() | set(unused)) - free_vars(case.expr), key=Name.key)
    chosen = frozenset(n for n in candidates if rng.random() < 0.7)
    return Config(case.heap, case.expr, env, case.open_names, {"fresh": chosen})


def _fresh_binding(cfg: GenConfig, rng: random.Random) -> Config:
    supply = NameSupply(rng)
    case = gen_config(cfg, rng, env_on_heap=True, supply=supply)
    x = supply.heap_name()
    scope = sorted(case.heap.domain() | case.open_names | {x}, key=Name.key)
    e = gen_expr(rng, rng.randint(1, cfg.max_expr_size), scope, supply)
    return Config(case.heap, e, case.env, case.open_names, {"x": x})


def _merge_case(cfg: GenConfig, rng: random.Random) -> Config:
    """Δ with an environment, then Γ over fresh names that may refer to Δ and ρ."""
    supply = NameSupply(rng)
    case = gen_config(cfg, rng, env_on_heap=True, supply=supply)
    gamma_names = [supply.heap_name() for _ in range(rng.randint(1, max(1, cfg.max_heap_bindings // 2)))]
    scope = sorted(case.heap.domain() | case.open_names | set(gamma_names), key=Name.key)
    half = max(1, cfg.max_expr_size // 2)
    gamma = Heap(tuple((n, gen_expr(rng, rng.randint(1, half), scope, supply)) for n in gamma_names))
    return Config(case.heap, case.expr, case.env, case.open_names, {"gamma": gamma})


def _let_case(cfg: GenConfig, rng: random.Random) -> Config:
    supply = NameSupply(rng)
    case = gen_config(cfg, rng, supply=supply)
    z = supply.heap_name()
    binders = [supply.binder() for _ in range(rng.randint(1, 2))]
    scope = sorted(case.heap.domain() | case.open_names | {z} | set(binders), key=Name.key)
    half = max(1, cfg.max_expr_size // 2)
    bindings = tuple((b, gen_expr(rng, rng.randint(1, half), scope, supply)) for b in binders)
    body = gen_expr(rng, rng.randint(1, half), scope, supply)
    return Config(case.heap, Let(bindings, body), Env.bottom(cfg.rank), case.open_names, {"z": z})


def _subst_case(cfg: GenConfig, rng: random.Random) -> Config:
    supply = NameSupply(rng)
    case = gen_config(cfg, rng, env_on_heap=True, supply=supply)
    y = supply.env_name()
    pool = sorted(case.heap.domain() | case.open_names, key=Name.key)
    x = rng.choice(pool) if pool and rng.random() < 0.8 else supply.env_name()
    e = gen_expr(rng, rng.randint(1, cfg.max_expr_size), pool + [y, y], supply)
    if y not in free_vars(e):
        e = App(e, y)
    return Config(case.heap, e, case.env, case.open_names | {x, y}, {"x": x, "y": y})


def _let_wrapped(cfg: GenConfig, rng: random.Random) -> Config:
    case = gen_config(cfg, rng, env_on_heap=False)
    expr = Let(case.heap.bindings, case.expr) if len(case.heap) else case.expr
    return Config(Heap(), expr, case.env, case.open_names | case.heap.domain())


# =============================================================================
# JOIN-BASED HEAP SEMANTICS
# =============================================================================

@lemma("esem_this", "x ↦ e ∈ Γ implies (⟦Γ⟧ρ) x = ρ x ⊔ ⟦e⟧(⟦Γ⟧ρ)", _heap_with_env)
def _esem_this(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    den = Denoter(r, JOIN)
    heap = prepare_heap(case.heap, rho.dom())
    env = den.heap_raw(heap, rho)
    return _first_failure(
        _expect_equal(env(x), lub(rho(x), den.expr_raw(e, env)), f"lookup of {x}") for x, e in heap
    )


@lemma("esem_other", "x ∉ dom Γ implies (⟦Γ⟧ρ) x = ρ x; disjoint domains give (⟦Γ⟧ρ) \\ dom Γ = ρ", _heap_with_env)
def _esem_other(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    env = Denoter(r, JOIN).heap(case.heap, rho)
    outside = sorted(rho.dom() - case.heap.domain(), key=Name.key) + [Name("unused")]
    results = [_expect_equal(env(x), rho(x), f"lookup of {x}") for x in outside]
    if not (rho.dom() & case.heap.domain()):
        results.append(_expect_equal(env_subtract(env, case.heap.domain()), rho, "removing dom Γ"))
    return _first_failure(results)


@lemma("rho_below_esem", "ρ ⊑ ⟦Γ⟧ρ", _heap_with_env)
def _rho_below_esem(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    return _expect_below(rho, Denoter(r, JOIN).heap(case.heap, rho), "ρ below its heap refinement")


@lemma("esem_below", "ρ ⊑ ρ* and ⟪Γ⟫ρ* ⊑ ρ* imply ⟦Γ⟧ρ ⊑ ρ*", _with_noise)
def _esem_below(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    noise = lift_env(case.extra["noise"], r)
    den = Denoter(r, JOIN)
    heap = prepare_heap(case.heap, rho.dom() | noise.dom())
    env = den.heap_raw(heap, rho)
    if case.extra["mode"] == "above_heap":
        target = env_lub(env, noise)
    else:
        target = env_lub(rho, noise)
    if not env_leq(rho, target) or not env_leq(den.bindings_env(heap, target), target):
        return CaseResult.skipped("ρ* is not a pre-fixed point above ρ")
    return _expect_below(env, target, "least pre-fixed point")


@lemma(
    "esem_subst_expr",
    "⟦e1⟧(⟦x ↦ e2, Γ⟧ρ) ⊑ ⟦e2⟧(⟦x ↦ e2, Γ⟧ρ) implies ⟦x ↦ e1, Γ⟧ρ ⊑ ⟦x ↦ e2, Γ⟧ρ; both directions give equality",
    _binding_pair,
)
def _esem_subst_expr(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    x, e1, e2 = case.extra["x"], case.extra["e1"], case.extra["e2"]
    den = Denoter(r, JOIN)
    with_e1 = den.heap(case.heap.extend([(x, e1)]), rho)
    with_e2 = den.heap(case.heap.extend([(x, e2)]), rho)
    forward = domain.leq(den.expr(e1, with_e2), den.expr(e2, with_e2))
    backward = domain.leq(den.expr(e2, with_e1), den.expr(e1, with_e1))
    if not (forward or backward):
        return CaseResult.skipped("neither replacement hypothesis holds")
    results = []
    if forward:
        results.append(_expect_below(with_e1, with_e2, "replacing e2 by a smaller e1"))
    if backward:
        results.append(_expect_below(with_e2, with_e1, "replacing e1 by a smaller e2"))
    if forward and backward:
        results.append(_expect_equal(with_e1, with_e2, "mutual replacement"))
    return _first_failure(results)


@lemma("exp_var_subst", "z ∉ dom ρ implies ⟦y ↦ e'[e], z ↦ e, Γ⟧ρ = ⟦y ↦ e'[z], z ↦ e, Γ⟧ρ", _context_case)
def _exp_var_subst(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    y, z, ctx = case.extra["y"], case.extra["z"], case.extra["context"]
    if z in rho.dom():
        return CaseResult.skipped("z bound in ρ")
    den = Denoter(r, JOIN)
    inlined = Heap(((y, plug(ctx, case.expr)), (z, case.expr)) + case.heap.bindings)
    shared = Heap(((y, plug(ctx, Var(z))), (z, case.expr)) + case.heap.bindings)
    return _expect_equal(den.heap(inlined, rho), den.heap(shared, rho), "indirection through z")


@lemma("redo", "⟦Γ⟧(⟦Γ, Δ⟧ \\ dom Γ) = ⟦Γ, Δ⟧", _split_heap)
def _redo(case: Config, r: int) -> CaseResult:
    den = Denoter(r, JOIN)
    gamma_names = case.extra["gamma"]
    gamma = Heap(tuple((n, e) for n, e in case.heap if n in gamma_names))
    whole = den.heap(case.heap, Env.bottom(r))
    again = den.heap(gamma, env_subtract(whole, gamma_names))
    return _expect_equal(again, whole, "recomputing Γ over the rest")


@lemma("see_through_fresh", "S fresh for e implies ⟦e⟧ρ = ⟦e⟧(ρ \\ S)", _fresh_set)
def _see_through_fresh(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    fresh = case.extra["fresh"]
    if not (fresh & rho.dom()):
        return CaseResult.skipped("S misses dom ρ")
    den = Denoter(r, JOIN)
    return _expect_equal(den.expr(case.expr, rho), den.expr(case.expr, env_subtract(rho, fresh)), "removing S")


@lemma("addvar", "x fresh implies ⟦Γ⟧ρ = (⟦x ↦ e, Γ⟧ρ) \\ {x}", _fresh_binding)
def _addvar(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    x = case.extra["x"]
    den = Denoter(r, JOIN)
    extended = Heap(((x, case.expr),) + case.heap.bindings)
    return _expect_equal(
        den.heap(case.heap, rho), env_subtract(den.heap(extended, rho), {x}), f"adding fresh {x}"
    )


def _merge(variant: HeapVariant) -> Callable[[Config, int], CaseResult]:
    def check(case: Config, r: int) -> CaseResult:
        rho = lift_env(case.env, r)
        gamma = case.extra["gamma"]
        if gamma.domain() & (rho.dom() | case.heap.free_vars() | case.heap.domain()):
            return CaseResult.skipped("dom Γ is not fresh")
        den = Denoter(r, variant)
        nested = den.heap(gamma, den.heap(case.heap, rho))
        merged = den.heap(gamma.extend(case.heap.bindings), rho)
        return _expect_equal(nested, merged, f"merging heaps ({variant.value})")
    return check


lemma("esem_merge", "dom Γ fresh for Δ, ρ implies ⟦Γ⟧(⟦Δ⟧ρ) = ⟦Γ, Δ⟧ρ", _merge_case)(_merge(JOIN))


@lemma("let_unfold", "⟦z ↦ let Δ in e, Γ⟧ ⪯ ⟦Δ, z ↦ e, Γ⟧", _let_case)
def _let_unfold(case: Config, r: int) -> CaseResult:
    z = case.extra["z"]
    let = case.expr
    packed = Heap(((z, let),) + case.heap.bindings)
    unpacked = Heap(let.bindings + ((z, let.body),) + case.heap.bindings)
    bottom = Env.bottom(r)
    if preceq(packed, bottom, unpacked, bottom, r, JOIN):
        return CaseResult.passed()
    den = Denoter(r, JOIN)
    return CaseResult.failed(den.heap(packed, bottom), den.heap(unpacked, bottom), "unfolding the let onto the heap")


# =============================================================================
# UPDATE-BASED HEAP SEMANTICS
# =============================================================================

@lemma("esemu_this", "x ↦ e ∈ Γ implies (⟦Γ⟧ρ) x = ⟦e⟧(⟦Γ⟧ρ) under right-sided update", _heap_with_env)
def _esemu_this(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    den = Denoter(r, UPDATE)
    heap = prepare_heap(case.heap, rho.dom())
    env = den.heap_raw(heap, rho)
    return _first_failure(_expect_equal(env(x), den.expr_raw(e, env), f"lookup of {x}") for x, e in heap)


@lemma("esemu_other", "x ∉ dom Γ implies (⟦Γ⟧ρ) x = ρ x under right-sided update", _heap_with_env)
def _esemu_other(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    env = Denoter(r, UPDATE).heap(case.heap, rho)
    outside = sorted(rho.dom() - case.heap.domain(), key=Name.key) + [Name("unused")]
    return _first_failure(_expect_equal(env(x), rho(x), f"lookup of {x}") for x in outside)


@lemma(
    "iter",
    "⟦x ↦ e, Γ⟧ρ = μρ'. ρ + (⟦Γ⟧ρ')|dom Γ + (x ↦ ⟦e⟧(⟦Γ⟧ρ'))",
    _heap_with_env,
)
def _iter(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    den = Denoter(r, UPDATE)
    heap = prepare_heap(case.heap, rho.dom())
    (x, e), rest = heap.bindings[0], Heap(heap.bindings[1:])
    direct = den.heap_raw(heap, rho)

    def step(current: Env) -> Env:
        inner = den.heap_raw(rest, current)
        updated = env_update(rho, inner, rest.domain())
        return env_update(updated, Env.of(r, {x: den.expr_raw(e, inner)}), {x})

    iterated = lfp_env(step, r, heap.domain() | rho.dom())
    return _expect_equal(direct, iterated, "iterative heap definition")


lemma("esemu_merge", "dom Γ fresh for Δ, ρ implies ⟦Γ⟧(⟦Δ⟧ρ) = ⟦Γ, Δ⟧ρ under right-sided update", _merge_case)(
    _merge(UPDATE)
)


@lemma("subst", "y fresh for ρ implies ⟦e⟧(ρ(y ↦ ⟦x⟧ρ)) = ⟦e[x/y]⟧ρ in both variants", _subst_case)
def _subst(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    x, y = case.extra["x"], case.extra["y"]
    if y in rho.dom() or x == y:
        return CaseResult.skipped("y is not fresh for ρ")
    if y not in free_vars(case.expr):
        return CaseResult.skipped("y does not occur in e")
    results = []
    for variant in (JOIN, UPDATE):
        den = Denoter(r, variant)
        results.append(_expect_equal(
            den.expr(case.expr, rho.set(y, rho(x))),
            den.expr(subst(case.expr, x, y), rho),
            f"indirection versus substitution ({variant.value})",
        ))
    return _first_failure(results)


@lemma("deneq", "⟦e⟧ρ is the same under both heap variants", _let_wrapped)
def _deneq(case: Config, r: int) -> CaseResult:
    rho = lift_env(case.env, r)
    return _expect_equal(
        Denoter(r, JOIN).expr(case.expr, rho),
        Denoter(r, UPDATE).expr(case.expr, rho),
        "join versus update",
    )
