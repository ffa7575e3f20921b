"""
Verification suite - counterexamples, correctness theorems, the equivalence
of the two operational semantics, and the heap-semantics lemmas.

Usage:
    from needlab.verifier import run_suite
    from needlab.config import GenConfig

    reports = run_suite("all", GenConfig(seed=42, cases=100))
    assert all(r.ok for r in reports)

Every check produces a CheckReport. Generated properties run `cfg.cases`
cases, each from its own RNG, so a report depends only on (seed, cfg) and
not on the number of worker processes.
"""

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from . import domain
from .config import GenConfig, Suite
from .denotational import (
    Comparison,
    Denoter,
    HeapVariant,
    Verdict,
    den_eq_settled,
    den_eq_stable,
    preceq,
    stabilization_ranks,
)
from .domain import DomElem, Env, describe, env_le, lfp_env, lift_env
from .errors import NeedlabError
from .gen import Config, NameSupply, case_rng, gen_config, shrink
from .lemmas import LEMMAS, CaseResult, CaseStatus, Property
from .natural import NatStatus, eval_nat
from .stacked import Stack, check_stack_trace, combined, eval_stacked, run_via_stack
from .syntax import App, Expr, Heap, Lam, Name, Var, alpha_eq, free_vars, heap_alpha_eq, parse, print_expr

logger = logging.getLogger(__name__)

JOIN = HeapVariant.JOIN
UPDATE = HeapVariant.UPDATE

# Rank the published counterexample lives at, and where it is observed
COUNTEREXAMPLE_RANK = 3
COUNTEREXAMPLE_OBS_RANK = 2


# =============================================================================
# REPORTS
# =============================================================================

@dataclass
class Witness:
    """A failing case (or failing fixed claim) with both sides of the comparison."""
    index: Optional[int]
    inputs: Dict[str, Any]
    lhs: Optional[str] = None
    rhs: Optional[str] = None
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        data = {"seed_index": self.index, **self.inputs, "detail": self.detail}
        if self.lhs is not None:
            data["lhs"] = self.lhs
        if self.rhs is not None:
            data["rhs"] = self.rhs
        return data


@dataclass
class CheckReport:
    """
    Outcome of one property check.

    cases_run counts non-vacuous cases (passed + failed + inconclusive);
    skipped cases did not meet the property's hypotheses.
    """
    property_id: str
    passed: int = 0
    failed: int = 0
    inconclusive: int = 0
    skipped: int = 0
    witnesses: List[Witness] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    quota: Optional[int] = None
    duration_ms: float = 0.0

    @property
    def cases_run(self) -> int:
        return self.passed + self.failed + self.inconclusive

    @property
    def skip_rate(self) -> float:
        """Share of generated cases that did not meet the hypotheses."""
        total = self.cases_run + self.skipped
        return self.skipped / total if total else 0.0

    @property
    def quota_met(self) -> bool:
        return self.quota is None or self.cases_run >= self.quota

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.quota_met

    def record(self, index: Optional[int], inputs: Dict[str, Any], result: CaseResult) -> None:
        if result.status == CaseStatus.PASSED:
            self.passed += 1
        elif result.status == CaseStatus.SKIPPED:
            self.skipped += 1
        elif result.status == CaseStatus.INCONCLUSIVE:
            self.inconclusive += 1
        else:
            self.failed += 1
            self.witnesses.append(Witness(index, inputs, result.lhs, result.rhs, result.detail))

    def claim(self, name: str, holds: bool, lhs: Any = None, rhs: Any = None, detail: str = "") -> bool:
        """Record one fixed assertion of a witness check."""
        self.notes.append(f"{name}: {'holds' if holds else 'FAILED'}")
        if holds:
            self.passed += 1
        else:
            self.failed += 1
            self.witnesses.append(Witness(
                None,
                {"claim": name},
                None if lhs is None else str(lhs),
                None if rhs is None else str(rhs),
                detail,
            ))
        return holds

    def summary(self) -> str:
        status = "ok" if self.ok else "FAIL"
        line = (
            f"{status:4} {self.property_id}: {self.passed} passed, {self.failed} failed, "
            f"{self.inconclusive} inconclusive, {self.skipped} skipped"
        )
        if not self.quota_met:
            line += f" (only {self.cases_run} non-vacuous cases, quota {self.quota})"
        return line

    def to_dict(self, timings: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "property_id": self.property_id,
            "ok": self.ok,
            "cases_run": self.cases_run,
            "passed": self.passed,
            "failed": self.failed,
            "inconclusive": self.inconclusive,
            "skipped": self.skipped,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }
        if self.notes:
            data["notes"] = list(self.notes)
        if self.quota is not None:
            data["quota"] = self.quota
        if self.skipped:
            data["skip_rate"] = round(self.skip_rate, 4)
        if timings:
            data["duration_ms"] = round(self.duration_ms, 3)
        return data

    def save(self, path: Union[str, Path], timings: bool = False) -> str:
        """Write the report as JSON, return the path."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(timings), f, indent=2, sort_keys=True)
        return str(path)


# =============================================================================
# SHARED COMPARISON HELPERS
# =============================================================================

class _Denotations:
    """Denoters per rank for one heap variant, shared by both sides of a comparison."""

    def __init__(self, variant: HeapVariant):
        self.variant = variant
        self._denoters: Dict[int, Denoter] = {}
        self._heaps: Dict[Tuple[Heap, Env, int], Env] = {}

    def at(self, rank: int) -> Denoter:
        if rank not in self._denoters:
            self._denoters[rank] = Denoter(rank, self.variant)
        return self._denoters[rank]

    def heap(self, heap: Heap, rho: Env, rank: int) -> Env:
        key = (heap, rho, rank)
        if key not in self._heaps:
            self._heaps[key] = self.at(rank).heap(heap, lift_env(rho, rank))
        return self._heaps[key]

    def expr(self, e: Expr, heap: Heap, rho: Env, rank: int) -> DomElem:
        return self.at(rank).expr(e, self.heap(heap, rho, rank))


def _from_comparison(cmp: Comparison, what: str) -> CaseResult:
    if cmp.verdict == Verdict.NOT_EQUAL:
        return CaseResult.failed(describe(cmp.lhs[-1]), describe(cmp.rhs[-1]), f"{what}: {cmp.witness}")
    if cmp.verdict == Verdict.INCONCLUSIVE:
        return CaseResult.inconclusive(f"{what} not settled across ranks {list(cmp.ranks)} at m={cmp.obs_rank}")
    return CaseResult.passed()


def _exact_below(lhs: DomElem, rhs: DomElem, what: str) -> CaseResult:
    if domain.leq(lhs, rhs):
        return CaseResult.passed()
    return CaseResult.failed(describe(lhs), describe(rhs), f"{what}: left side not below right side at rank {lhs.rank}")


def _combine(results: Iterable[CaseResult]) -> CaseResult:
    """First failure, else first inconclusive, else passed."""
    pending = None
    for result in results:
        if result.is_failure:
            return result
        if result.status == CaseStatus.INCONCLUSIVE and pending is None:
            pending = result
    return pending or CaseResult.passed()


def _obs_rank(rank: int) -> int:
    return max(0, min(rank - 1, stabilization_ranks(rank)[0]))


# =============================================================================
# COUNTEREXAMPLE AND FAILED FIXES
# =============================================================================

def counterexample_setup() -> Tuple[Heap, Expr, Lam, Env]:
    """Γ = {x ↦ v}, e = x, v = λa. let b = b in b, and ρ x = Fn(λ_.Fn(λz.z)) at rank 3."""
    x = Name("x")
    v = parse(r"\a. let b = b in b")
    rho = Env.of(COUNTEREXAMPLE_RANK, {
        x: domain.const(COUNTEREXAMPLE_RANK, domain.identity(COUNTEREXAMPLE_RANK - 1)),
    })
    return Heap.of((x, v)), Var(x), v, rho


def _compare_configs(
    before: Heap, e: Expr, after: Heap, v: Expr, rho: Env, variant: HeapVariant, obs_rank: int, ranks: Sequence[int]
) -> Tuple[Comparison, _Denotations]:
    dens = _Denotations(variant)
    cmp = den_eq_stable(
        lambda r: dens.expr(e, before, rho, r),
        lambda r: dens.expr(v, after, rho, r),
        obs_rank,
        ranks,
    )
    return cmp, dens


def counterexample_outcome() -> Dict[str, Any]:
    """Evaluate the published counterexample under both heap variants and ρ⊥."""
    heap, e, v, rho = counterexample_setup()
    result = eval_nat(heap, e)
    if not result.is_success():
        return {"evaluation": result.to_dict()}
    ranks = stabilization_ranks(COUNTEREXAMPLE_RANK)
    delta, value = result.heap, result.value
    join, join_dens = _compare_configs(heap, e, delta, value, rho, JOIN, COUNTEREXAMPLE_OBS_RANK, ranks)
    update, _ = _compare_configs(heap, e, delta, value, rho, UPDATE, COUNTEREXAMPLE_OBS_RANK, ranks)
    bottom, _ = _compare_configs(
        heap, e, delta, value, Env.bottom(COUNTEREXAMPLE_RANK), JOIN, COUNTEREXAMPLE_OBS_RANK, ranks
    )
    return {
        "heap": str(heap),
        "expr": print_expr(e),
        "env": rho.to_json(),
        "evaluation": result.to_dict(),
        "value_matches": alpha_eq(value, v),
        "join_variant": join.verdict.value,
        "update_variant": update.verdict.value,
        "bottom_env_join": bottom.verdict.value,
        "join": join.to_dict(),
        "update": update.to_dict(),
        "bottom_env": bottom.to_dict(),
        "join_exact": {
            "lhs": describe(join_dens.expr(e, heap, rho, COUNTEREXAMPLE_RANK)),
            "rhs": describe(join_dens.expr(value, delta, rho, COUNTEREXAMPLE_RANK)),
        },
        "update_preceq": preceq(heap, rho, delta, rho, COUNTEREXAMPLE_RANK, UPDATE),
    }


def check_counterexample() -> CheckReport:
    """The generalized correctness claim fails for join heaps and holds for update heaps."""
    report = CheckReport("counterexample")
    heap, e, v, rho = counterexample_setup()
    result = eval_nat(heap, e)
    if not report.claim("evaluates to v", result.is_success() and alpha_eq(result.value, v), result.describe(), v):
        return report
    delta, value = result.heap, result.value
    ranks = stabilization_ranks(COUNTEREXAMPLE_RANK)
    rank = COUNTEREXAMPLE_RANK

    join, dens = _compare_configs(heap, e, delta, value, rho, JOIN, COUNTEREXAMPLE_OBS_RANK, ranks)
    for r in ranks:
        # ρ x = Fn(λ_.Fn(λz.z)) carried to rank r
        expected_lhs = lift_env(rho, r)(e.name)
        expected_rhs = domain.const(r, domain.bot(r - 1))
        lhs, rhs = dens.expr(e, heap, rho, r), dens.expr(value, delta, rho, r)
        report.claim(f"join lhs is Fn(λ_.Fn(λz.z)) at rank {r}", lhs == expected_lhs, describe(lhs),
                     describe(expected_lhs))
        report.claim(f"join rhs is Fn(λ_.⊥) at rank {r}", rhs == expected_rhs, describe(rhs), describe(expected_rhs))
    report.claim("join sides differ", join.verdict == Verdict.NOT_EQUAL, join.verdict.value, Verdict.NOT_EQUAL.value,
                 join.witness or "")

    update, _ = _compare_configs(heap, e, delta, value, rho, UPDATE, COUNTEREXAMPLE_OBS_RANK, ranks)
    report.claim("update sides agree", update.verdict == Verdict.EQUAL, update.verdict.value, Verdict.EQUAL.value)
    report.claim("update heaps ⪯", preceq(heap, rho, delta, rho, rank, UPDATE))

    bottom, _ = _compare_configs(heap, e, delta, value, Env.bottom(rank), JOIN, COUNTEREXAMPLE_OBS_RANK, ranks)
    report.claim("join with ρ⊥ agrees", bottom.verdict == Verdict.EQUAL, bottom.verdict.value, Verdict.EQUAL.value)
    return report


def _p1(den: Denoter, rho: Env, heap: Heap) -> bool:
    """∀ (x ↦ e) ∈ Γ. ρ x ⊑ ⟦e⟧ρ"""
    return all(domain.leq(rho(x), den.expr(e, rho)) for x, e in heap)


def _p2(den: Denoter, rho: Env, heap: Heap) -> bool:
    """∀ (x ↦ e) ∈ Γ. ρ x ⊑ ⟦e⟧(⟦Γ⟧ρ)"""
    env = den.heap(heap, rho)
    return all(domain.leq(rho(x), den.expr(e, env)) for x, e in heap)


def check_failed_fixes(rank: int = COUNTEREXAMPLE_RANK) -> CheckReport:
    """Witnesses against three attempted repairs of the generalized claim, and the ≤ pitfall."""
    report = CheckReport("failed_fixes")
    den = Denoter(rank, JOIN)
    x, y, z = Name("x"), Name("y"), Name("z")

    # P1 is not preserved by evaluation
    gamma = Heap.of((x, parse(r"let y = z in \q. y")))
    result = eval_nat(gamma, Var(x))
    if report.claim("first repair: x evaluates", result.is_success(), result.describe()):
        rho = Env.of(rank, {
            x: domain.const(rank, domain.const(rank - 1, domain.bot(rank - 2))),
            z: domain.const(rank, domain.bot(rank - 1)),
        })
        report.claim("first repair: holds before evaluation", _p1(den, rho, gamma), rho, gamma)
        report.claim("first repair: fails after evaluation", not _p1(den, rho, result.heap), rho, result.heap)

    # P2 is too weak for the Var case
    gamma = Heap.of((x, parse(r"\z. z")), (y, Var(x)))
    rho = Env.of(rank, {y: domain.identity(rank)})
    report.claim("second repair: holds for Γ", _p2(den, rho, gamma), rho, gamma)
    report.claim("second repair: fails once x is removed", not _p2(den, rho, gamma.remove(x)), rho, gamma.remove(x))

    # requiring dom ρ to avoid the heap is too strong
    gamma = Heap.of((y, parse(r"\a. a")))

    def step(current: Env) -> Env:
        env = den.heap(gamma, current)
        return domain.env_lub(env, Env.of(rank, {x: den.expr(Var(y), env)}))

    fixed = lfp_env(step, rank, {x, y})
    report.claim(
        "third repair: the Var functional's fixed point meets dom Γ",
        bool(fixed.dom() & gamma.domain()),
        fixed,
        gamma,
    )

    # ≤ does not give equality of lookups
    left = den.heap(Heap.of((x, Var(x))), Env.bottom(rank))
    right = den.heap(Heap.of((x, parse(r"\a. a"))), Env.bottom(rank))
    report.claim("pitfall: ⟦x ↦ x⟧ ≤ ⟦x ↦ λa.a⟧", env_le(left, right), left, right)
    report.claim("pitfall: lookups of x differ", left(x) != right(x), describe(left(x)), describe(right(x)))
    return report


# =============================================================================
# THEOREM PROPERTIES
# =============================================================================

class TheoremKind(str, Enum):
    NAT1 = "nat1"
    UPDATE2 = "update2"
    STACKED5 = "stacked5"


class NaturalCorrectness(Property):
    property_id = "theorem_nat1"
    description = "Γ : e ⇓ Δ : v implies ⟦e⟧⟦Γ⟧ = ⟦v⟧⟦Δ⟧ and ⟦Γ⟧ ⪯ ⟦Δ⟧ (join heaps, ρ⊥)"
    conditional = True

    def generate(self, cfg: GenConfig, rng) -> Config:
        return gen_config(cfg, rng, closed=True)

    def admits(self, case: Config) -> bool:
        return not case.open_names and not case.env.bindings

    def check(self, case: Config, cfg: GenConfig) -> CaseResult:
        result = eval_nat(case.heap, case.expr, case.env.dom(), cfg.fuel)
        if not result.is_success():
            return CaseResult.skipped(result.status.value)
        dens = _Denotations(JOIN)
        rho = case.env
        cmp = den_eq_settled(
            lambda r: dens.expr(case.expr, case.heap, rho, r),
            lambda r: dens.expr(result.value, result.heap, rho, r),
            _obs_rank(cfg.rank),
            stabilization_ranks(cfg.rank),
        )
        exact = _exact_below(
            dens.expr(case.expr, case.heap, rho, cfg.rank),
            dens.expr(result.value, result.heap, rho, cfg.rank),
            "⟦e⟧⟦Γ⟧ ⊑ ⟦v⟧⟦Δ⟧",
        )
        return _combine([exact, _from_comparison(cmp, "⟦e⟧⟦Γ⟧ vs ⟦v⟧⟦Δ⟧")])


def _heap_claims(
    dens: _Denotations, before: Heap, after: Heap, rho: Env, cfg: GenConfig
) -> List[CaseResult]:
    """dom Γ ⊆ dom Δ, rank-exact pointwise ⊑ and stabilized pointwise equality on dom Γ."""
    if not before.domain() <= after.domain():
        missing = ", ".join(sorted(str(n) for n in before.domain() - after.domain()))
        return [CaseResult.failed(before, after, f"heap names lost during evaluation: {missing}")]
    ranks = stabilization_ranks(cfg.rank)
    m = _obs_rank(cfg.rank)
    lower, upper = dens.heap(before, rho, cfg.rank), dens.heap(after, rho, cfg.rank)
    results = []
    for x in before.names():
        results.append(_exact_below(lower(x), upper(x), f"lookup of {x}"))
        cmp = den_eq_settled(
            lambda r, x=x: dens.heap(before, rho, r)(x),
            lambda r, x=x: dens.heap(after, rho, r)(x),
            m,
            ranks,
        )
        results.append(_from_comparison(cmp, f"lookup of {x}"))
    return results


class UpdateCorrectness(Property):
    property_id = "theorem_update2"
    description = "Γ : e ⇓ Δ : v implies ⟦e⟧(⟦Γ⟧ρ) = ⟦v⟧(⟦Δ⟧ρ) and ⟦Γ⟧ρ ⪯ ⟦Δ⟧ρ for all ρ (update heaps)"
    conditional = True

    def generate(self, cfg: GenConfig, rng) -> Config:
        return gen_config(cfg, rng, min_heap=1, env_on_heap=True, nontrivial_env=True)

    def admits(self, case: Config) -> bool:
        # ρ ≠ ρ⊥ over a non-empty heap
        return len(case.heap) > 0 and bool(case.env.bindings)

    def check(self, case: Config, cfg: GenConfig) -> CaseResult:
        result = eval_nat(case.heap, case.expr, case.env.dom(), cfg.fuel)
        if not result.is_success():
            return CaseResult.skipped(result.status.value)
        dens = _Denotations(UPDATE)
        rho = case.env
        cmp = den_eq_settled(
            lambda r: dens.expr(case.expr, case.heap, rho, r),
            lambda r: dens.expr(result.value, result.heap, rho, r),
            _obs_rank(cfg.rank),
            stabilization_ranks(cfg.rank),
        )
        exact = _exact_below(
            dens.expr(case.expr, case.heap, rho, cfg.rank),
            dens.expr(result.value, result.heap, rho, cfg.rank),
            "⟦e⟧(⟦Γ⟧ρ) ⊑ ⟦v⟧(⟦Δ⟧ρ)",
        )
        return _combine(
            [exact, _from_comparison(cmp, "⟦e⟧(⟦Γ⟧ρ) vs ⟦v⟧(⟦Δ⟧ρ)")]
            + _heap_claims(dens, case.heap, result.heap, rho, cfg)
        )


class StackedCorrectness(Property):
    property_id = "theorem_stacked5"
    description = "Γ : Γ' ⇓ Δ : Δ' implies ⟦Γ, Γ'⟧ ⪯ ⟦Δ, Δ'⟧ (join heaps, ρ⊥)"
    conditional = True

    def generate(self, cfg: GenConfig, rng) -> Config:
        supply = NameSupply(rng)
        case = gen_config(cfg, rng, closed=True, supply=supply)
        z = supply.new(("z",))
        frames = [(z, case.expr)]
        heap_names = list(case.heap.names())
        if heap_names and rng.random() < 0.5:
            below = supply.new(("u",))
            frame = App(Var(z), rng.choice(heap_names)) if rng.random() < 0.6 else Var(z)
            frames.append((below, frame))
        return Config(case.heap, case.expr, case.env, case.open_names, {"frames": tuple(frames)})

    def admits(self, case: Config) -> bool:
        # lower frames may only mention heap names and frame names
        frames = case.extra["frames"]
        scope = case.heap.domain() | {name for name, _ in frames}
        lower = frozenset().union(*(free_vars(e) for _, e in frames[1:]))
        return not case.open_names and not case.env.bindings and lower <= scope

    def check(self, case: Config, cfg: GenConfig) -> CaseResult:
        frames = case.extra["frames"]
        # the shrinker only rewrites case.expr; keep the top frame in step with it
        stack = Stack(((frames[0][0], case.expr),) + tuple(frames[1:]))
        result = eval_stacked(case.heap, stack, case.env.dom(), cfg.fuel)
        if not result.is_success():
            return CaseResult.skipped(result.status.value)
        problems = check_stack_trace(result.trace)
        if problems:
            return CaseResult.failed(stack, result.stack, "; ".join(problems[:3]))
        if result.stack.names() != stack.names() or result.stack.tail != stack.tail:
            return CaseResult.failed(stack, result.stack, "stack below the top changed")

        before, after = combined(case.heap, stack), combined(result.heap, result.stack)
        dens = _Denotations(JOIN)
        rho = case.env
        results = _heap_claims(dens, before, after, rho, cfg)

        value = result.stack.top[1]
        cmp = den_eq_settled(
            lambda r: dens.expr(case.expr, before, rho, r),
            lambda r: dens.expr(value, after, rho, r),
            _obs_rank(cfg.rank),
            stabilization_ranks(cfg.rank),
        )
        results.append(_from_comparison(cmp, "⟦e⟧⟦Γ, Γ'⟧ vs ⟦v⟧⟦Δ, Δ'⟧"))
        return _combine(results)


class Equivalence(Property):
    property_id = "equivalence"
    description = "the natural and the stacked semantics agree on outcome and result up to renaming"

    def generate(self, cfg: GenConfig, rng) -> Config:
        return gen_config(cfg, rng, closed=rng.random() < 0.8)

    def check(self, case: Config, cfg: GenConfig) -> CaseResult:
        avoid = case.env.dom()
        nat = eval_nat(case.heap, case.expr, avoid, cfg.fuel)
        via = run_via_stack(case.heap, case.expr, avoid, cfg.fuel)
        if nat.status != via.status:
            return CaseResult.failed(nat.describe(), via.describe(), "outcome kinds differ")
        protect = case.heap.domain() | free_vars(case.expr)
        if nat.status != NatStatus.SUCCESS:
            if (nat.name in protect or via.name in protect) and nat.name != via.name:
                return CaseResult.failed(nat.describe(), via.describe(), "stuck on different variables")
            return CaseResult.passed()
        if not heap_alpha_eq((nat.heap, nat.value), (via.heap, via.value), protect):
            return CaseResult.failed(nat.describe(), via.describe(), "results differ beyond renaming")
        return CaseResult.passed()


# =============================================================================
# REGISTRY
# =============================================================================

WITNESS_CHECKS: Dict[str, Callable[[], CheckReport]] = {
    "counterexample": check_counterexample,
    "failed_fixes": check_failed_fixes,
}

PROPERTIES: Dict[str, Property] = {
    p.property_id: p
    for p in (NaturalCorrectness(), UpdateCorrectness(), StackedCorrectness(), Equivalence())
}
PROPERTIES.update(LEMMAS)

SUITES: Dict[str, Tuple[str, ...]] = {
    Suite.COUNTEREXAMPLES.value: tuple(WITNESS_CHECKS),
    Suite.THEOREMS.value: ("theorem_nat1", "theorem_update2", "theorem_stacked5"),
    Suite.EQUIVALENCE.value: ("equivalence",),
    Suite.LEMMAS.value: tuple(LEMMAS),
}
SUITES[Suite.ALL.value] = (
    SUITES["counterexamples"] + SUITES["theorems"] + SUITES["equivalence"] + SUITES["lemmas"]
)

# Every published result has exactly one check; kept in sync with the registry by the tests
MANIFEST = (
    "counterexample",
    "failed_fixes",
    "theorem_nat1",
    "theorem_update2",
    "theorem_stacked5",
    "equivalence",
    "esem_this",
    "esem_other",
    "rho_below_esem",
    "esem_below",
    "esem_subst_expr",
    "exp_var_subst",
    "redo",
    "see_through_fresh",
    "addvar",
    "esem_merge",
    "let_unfold",
    "esemu_this",
    "esemu_other",
    "iter",
    "esemu_merge",
    "subst",
    "deneq",
)


# =============================================================================
# RUNNING PROPERTIES
# =============================================================================

def _safe_check(prop: Property, case: Config, cfg: GenConfig) -> CaseResult:
    try:
        return prop.check(case, cfg)
    except Exception as exc:
        logger.debug("%s raised on %s", prop.property_id, case.to_dict(), exc_info=True)
        return CaseResult.failed("-", "-", f"check raised {type(exc).__name__}: {exc}")


def _still_fails(prop: Property, cfg: GenConfig) -> Callable[[Config], bool]:
    def predicate(candidate: Config) -> bool:
        if not prop.admits(candidate):
            return False
        try:
            return prop.check(candidate, cfg).is_failure
        except Exception:
            return False
    return predicate


def _run_case(property_id: str, cfg_data: Dict[str, Any], index: int) -> Dict[str, Any]:
    """Generate, check and (on failure) shrink one case. Module-level so worker processes can run it."""
    cfg = GenConfig(**cfg_data)
    prop = PROPERTIES[property_id]
    case = prop.generate(cfg, case_rng(cfg.seed, property_id, index))
    result = _safe_check(prop, case, cfg)
    if result.is_failure:
        smaller = shrink(case, _still_fails(prop, cfg))
        if smaller is not case:
            rechecked = _safe_check(prop, smaller, cfg)
            if rechecked.is_failure:
                case, result = smaller, rechecked
    outcome: Dict[str, Any] = {"index": index, "status": result.status.value}
    if result.is_failure:
        outcome.update(inputs=case.to_dict(), lhs=result.lhs, rhs=result.rhs, detail=result.detail)
    return outcome


def run_property(prop: Property, cfg: GenConfig) -> CheckReport:
    """Run cfg.cases cases of a generated property, in worker processes when cfg.jobs > 1."""
    start = time.perf_counter()
    report = CheckReport(prop.property_id, quota=cfg.quota if prop.conditional else None)
    cfg_data = cfg.model_dump()
    indices = range(cfg.cases)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunk = max(1, cfg.cases // (4 * cfg.jobs))
            outcomes = list(pool.map(
                _run_case,
                [prop.property_id] * cfg.cases,
                [cfg_data] * cfg.cases,
                indices,
                chunksize=chunk,
            ))
    else:
        outcomes = [_run_case(prop.property_id, cfg_data, i) for i in indices]

    for outcome in sorted(outcomes, key=lambda o: o["index"]):
        status = CaseStatus(outcome["status"])
        result = CaseResult(status, outcome.get("lhs"), outcome.get("rhs"), outcome.get("detail", ""))
        report.record(outcome["index"], outcome.get("inputs", {}), result)
    if not report.quota_met:
        logger.warning(
            "%s: only %d of %d cases met the hypotheses (quota %d)",
            prop.property_id, report.cases_run, cfg.cases, report.quota,
        )
    report.duration_ms = (time.perf_counter() - start) * 1000
    return report


def _timed(check: Callable[[], CheckReport]) -> CheckReport:
    start = time.perf_counter()
    report = check()
    report.duration_ms = (time.perf_counter() - start) * 1000
    return report


def check_theorem_correctness(cfg: GenConfig, which: Union[TheoremKind, str]) -> CheckReport:
    return run_property(PROPERTIES[f"theorem_{TheoremKind(which).value}"], cfg)


def check_theorem_equivalence(cfg: GenConfig) -> CheckReport:
    return run_property(PROPERTIES["equivalence"], cfg)


def check_lemma(lemma_id: str, cfg: GenConfig) -> CheckReport:
    if lemma_id not in LEMMAS:
        raise NeedlabError(f"Unknown lemma '{lemma_id}'. Known: {', '.join(LEMMAS)}")
    return run_property(LEMMAS[lemma_id], cfg)


def run_check(property_id: str, cfg: GenConfig) -> CheckReport:
    """Run one registered check by id."""
    if property_id in WITNESS_CHECKS:
        return _timed(WITNESS_CHECKS[property_id])
    if property_id in PROPERTIES:
        return run_property(PROPERTIES[property_id], cfg)
    raise NeedlabError(f"Unknown property '{property_id}'")


def resolve_selection(selection: Union[Suite, str, Sequence[str]]) -> Tuple[str, ...]:
    """Suite name (or a list of property ids) -> property ids in run order."""
    if isinstance(selection, Suite):
        return SUITES[selection.value]
    if isinstance(selection, str):
        if selection in SUITES:
            return SUITES[selection]
        selection = [selection]
    unknown = [p for p in selection if p not in WITNESS_CHECKS and p not in PROPERTIES]
    if unknown:
        raise NeedlabError(f"Unknown suite or property: {', '.join(unknown)}")
    return tuple(selection)


def run_suite(selection: Union[Suite, str, Sequence[str]], cfg: GenConfig) -> List[CheckReport]:
    """
    Run a suite.

    Args:
        selection: all | theorems | lemmas | counterexamples | equivalence, or property ids
        cfg: Generator settings shared by every generated property

    Returns:
        One CheckReport per property, in registry order
    """
    reports = []
    for property_id in resolve_selection(selection):
        report = run_check(property_id, cfg)
        logger.info(report.summary())
        reports.append(report)
    return reports
