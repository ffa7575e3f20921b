"""
Tests for needlab.denotational - Join and Update heap semantics and the
observation protocol.
"""

import pytest

from needlab import domain
from needlab.denotational import (
    Denoter,
    HeapVariant,
    Verdict,
    den_eq_settled,
    den_eq_stable,
    den_expr,
    den_heap,
    observe,
    preceq,
    prepare_heap,
    stabilization_ranks,
)
from needlab.config import GenConfig
from needlab.domain import Env, bot, const, embed, identity, leq, lub, project
from needlab.errors import RankError
from needlab.gen import case_rng, gen_config, gen_value
from needlab.syntax import App, Heap, Lam, Let, Name, Var, all_names, binder_list, fresh, parse, subst

x, y, z, k = Name("x"), Name("y"), Name("z"), Name("k")


# =============================================================================
# EXPRESSIONS
# =============================================================================

class TestExpressions:
    @pytest.mark.parametrize("rank", [1, 2, 3, 4])
    def test_identity(self, rank):
        assert den_expr(parse(r"\x. x"), Env.bottom(rank)) == identity(rank)

    @pytest.mark.parametrize("rank", [1, 2, 3, 4])
    def test_self_loop_is_bot(self, rank):
        assert den_expr(parse("let b = b in b"), Env.bottom(rank)) == bot(rank)

    def test_counterexample_value(self, ce_value):
        assert den_expr(ce_value, Env.bottom(3)) == const(3, bot(2))

    def test_variable(self):
        rho = Env.of(3, {x: identity(3)})
        assert den_expr(Var(x), rho) == identity(3)

    def test_application_rounds_through_lower_rank(self):
        rho = Env.of(3, {y: const(3, bot(2))})
        assert den_expr(parse(r"(\x. x) y"), rho) == embed(project(rho(y)))
        assert den_expr(parse(r"(\x. x) y"), rho) == const(3, bot(2))

    def test_binder_clashing_with_env(self):
        rho = Env.of(2, {x: identity(2), y: const(2, bot(1))})
        assert den_expr(parse(r"\x. y"), rho) == const(2, project(rho(y)))

    def test_let(self):
        assert den_expr(parse(r"let i = \a. a in i"), Env.bottom(2)) == identity(2)

    def test_default_rank_follows_env(self):
        assert den_expr(parse(r"\x. x"), Env.bottom(2), rank=3) == identity(3)


# =============================================================================
# HEAPS
# =============================================================================

class TestHeaps:
    def test_counterexample_join(self, ce_heap, ce_env):
        env = Denoter(3, HeapVariant.JOIN).heap(ce_heap, ce_env)
        assert env(x) == const(3, identity(2))

    def test_counterexample_update(self, ce_heap, ce_env):
        env = Denoter(3, HeapVariant.UPDATE).heap(ce_heap, ce_env)
        assert env(x) == const(3, bot(2))

    def test_join_versus_update(self):
        heap = Heap.of((x, parse(r"\a. a")))
        rho = Env.of(3, {x: const(3, identity(2))})
        assert den_heap(heap, rho)(x) == lub(const(3, identity(2)), identity(3))
        assert den_heap(heap, rho, variant=HeapVariant.UPDATE)(x) == identity(3)

    def test_mutual_reference(self):
        heap = Heap.of((x, Var(y)), (y, parse(r"\a. a")))
        env = den_heap(heap, Env.bottom(2))
        assert env(x) == identity(2)
        assert env(y) == identity(2)

    def test_env_outside_heap_kept(self):
        rho = Env.of(2, {z: identity(2)})
        env = den_heap(Heap.of((x, Var(z))), rho)
        assert env(z) == identity(2)
        assert env(x) == identity(2)

    def test_empty_heap(self):
        rho = Env.of(2, {z: identity(2)})
        assert den_heap(Heap(), rho) == rho

    def test_prepare_heap_distinct_binders(self):
        heap = Heap.of((x, parse(r"\a. a")), (y, parse(r"\a. x")))
        prepared = prepare_heap(heap, set())
        binders = [b for _, e in prepared for b in binder_list(e)]
        assert len(set(binders)) == len(binders)


class TestPreceq:
    def test_extension(self):
        gamma = Heap.of((x, parse(r"\a. a")))
        delta = gamma.extend([(y, parse(r"\b. b"))])
        rho = Env.bottom(2)
        assert preceq(gamma, rho, delta, rho)
        assert not preceq(delta, rho, gamma, rho)

    def test_changed_binding(self):
        gamma = Heap.of((x, Var(x)))
        delta = Heap.of((x, parse(r"\a. a")))
        assert not preceq(gamma, Env.bottom(2), delta, Env.bottom(2))


# =============================================================================
# OBSERVATION
# =============================================================================

class TestObserve:
    def test_same_rank(self):
        assert observe(identity(3), 3) == identity(3)

    def test_lower_rank(self):
        assert observe(identity(4), 2) == identity(2)

    def test_higher_rank(self):
        with pytest.raises(RankError):
            observe(identity(2), 3)


class TestDenEqStable:
    def test_equal(self):
        cmp = den_eq_stable(identity, identity, 2, (3, 4))
        assert cmp.verdict == Verdict.EQUAL
        assert cmp.ranks == (3, 4)
        assert cmp.witness is None

    def test_not_equal(self):
        cmp = den_eq_stable(identity, bot, 2, (3, 4))
        assert cmp.verdict == Verdict.NOT_EQUAL
        assert cmp.witness == "Fn(λx.x) vs ⊥"

    def test_inconclusive(self):
        cmp = den_eq_stable(lambda r: identity(r) if r == 4 else bot(r), bot, 2, (3, 4))
        assert cmp.verdict == Verdict.INCONCLUSIVE

    def test_uses_two_largest_ranks(self):
        cmp = den_eq_stable(identity, identity, 1, (2, 3, 4))
        assert cmp.ranks == (3, 4)

    def test_rank_below_observation(self):
        with pytest.raises(RankError):
            den_eq_stable(identity, identity, 2, (1, 2))

    def test_to_dict(self):
        data = den_eq_stable(identity, bot, 2, (3, 4)).to_dict()
        assert data["verdict"] == "not_equal"
        assert data["lhs"] == ["Fn(λx.x)", "Fn(λx.x)"]
        assert data["rhs"] == ["⊥", "⊥"]

    def test_approximating_side_below_is_inconclusive(self):
        cmp = den_eq_stable(bot, identity, 2, (3, 4), approximates=True)
        assert cmp.verdict == Verdict.INCONCLUSIVE
        assert cmp.witness is None

    def test_approximating_side_above_still_differs(self):
        cmp = den_eq_stable(identity, bot, 2, (3, 4), approximates=True)
        assert cmp.verdict == Verdict.NOT_EQUAL

    @pytest.mark.parametrize("rank,expected", [(1, (1, 2)), (3, (3, 4)), (4, (3, 4))])
    def test_stabilization_ranks(self, rank, expected):
        assert stabilization_ranks(rank) == expected


class TestDenEqSettled:
    def test_settles_at_coarser_observation(self):
        cmp = den_eq_settled(lambda r: const(r, bot(r - 1)), lambda r: const(r, identity(r - 1)), 2, (3, 4))
        assert cmp.verdict == Verdict.EQUAL
        assert cmp.obs_rank == 1

    def test_difference_reported_at_first_rank(self):
        cmp = den_eq_settled(identity, bot, 2, (3, 4))
        assert cmp.verdict == Verdict.NOT_EQUAL
        assert cmp.obs_rank == 2

    def test_unsettled_keeps_first_observation(self):
        cmp = den_eq_settled(bot, identity, 2, (3, 4))
        assert cmp.verdict == Verdict.INCONCLUSIVE
        assert cmp.obs_rank == 2

    def test_lost_rounding_is_not_a_difference(self):
        # five applications round the left side down to bot at ranks 3 and 4
        heap = Heap.of((k, parse(r"\f. k")))
        e = parse("k k k k k")
        left = lambda r: den_expr(e, den_heap(heap, Env.bottom(r)))
        right = lambda r: den_expr(parse(r"\f. k"), den_heap(heap, Env.bottom(r)))
        assert den_eq_stable(left, right, 2, (3, 4)).verdict == Verdict.NOT_EQUAL
        assert den_eq_settled(left, right, 2, (3, 4)).verdict == Verdict.INCONCLUSIVE


class TestDenoter:
    def test_rank_range(self):
        with pytest.raises(RankError):
            Denoter(5)
        with pytest.raises(RankError):
            Denoter(0)

    def test_env_rank_checked(self):
        with pytest.raises(RankError):
            Denoter(3).expr(Var(x), Env.bottom(2))

    def test_memo_reused(self):
        den = Denoter(3)
        e = parse(r"\a. let b = b in b")
        first = den.expr(e, Env.bottom(3))
        assert den.expr(e, Env.bottom(3)) == first
        assert den._memo


# =============================================================================
# INVARIANTS ON GENERATED CASES
# =============================================================================

INVARIANT_CFG = GenConfig(seed=19, rank=2, max_expr_size=6, max_heap_bindings=2)


def _generated(count, rank=2):
    cfg = INVARIANT_CFG.model_copy(update={"rank": rank})
    for i in range(count):
        case = gen_config(cfg, case_rng(cfg.seed, "denotational", i))
        e = Let(case.heap.bindings, case.expr) if len(case.heap) else case.expr
        yield case, e


class TestInvariants:
    @pytest.mark.parametrize("rank,count", [(2, 60), (3, 10)])
    def test_rank_monotonicity(self, rank, count):
        for case, e in _generated(count, rank):
            lower = den_expr(e, case.env, rank)
            upper = den_expr(e, case.env, rank + 1)
            assert leq(lower, project(upper)), str(e)

    def test_beta_approximation(self):
        checked = 0
        for case, e in _generated(60):
            if not case.open_names:
                continue
            a = sorted(case.open_names, key=Name.key)[0]
            b = fresh(all_names(e) | case.env.dom() | case.open_names, Name("y"))
            body = subst(e, b, a)
            redex = den_expr(App(Lam(b, body), a), case.env)
            assert leq(redex, den_expr(subst(body, a, b), case.env)), str(e)
            checked += 1
        assert checked

    def test_monotone_in_environment(self):
        for i, (case, e) in enumerate(_generated(60)):
            rng = case_rng(INVARIANT_CFG.seed, "raise", i)
            raised = Env.of(
                case.env.rank,
                {n: lub(case.env(n), gen_value(rng, case.env.rank)) for n in case.open_names},
            )
            assert leq(den_expr(e, case.env), den_expr(e, raised)), str(e)
