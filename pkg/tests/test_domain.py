"""
Tests for needlab.domain - finite-rank lattices, embedding-projection pairs,
environments and least fixed points.
"""

import itertools

import pytest
from hypothesis import given, settings

from needlab import domain
from needlab.domain import (
    DomElem,
    Env,
    bot,
    cardinality,
    const,
    describe,
    element,
    embed,
    enumerate_rank,
    env_le,
    env_leq,
    env_lub,
    env_restrict,
    env_subtract,
    env_update,
    fn_make,
    fn_project_apply,
    height,
    identity,
    index_of,
    kleene,
    leq,
    lfp_env,
    lift_env,
    lub,
    project,
    validate,
)
from needlab.errors import FixpointError, MonotonicityError, RankError
from needlab.syntax import Name
from strategies import elements

x, y, z = Name("x"), Name("y"), Name("z")


# =============================================================================
# ENUMERATION
# =============================================================================

class TestEnumeration:
    @pytest.mark.parametrize("rank,expected", [(0, 1), (1, 2), (2, 4), (3, 36)])
    def test_cardinality(self, rank, expected):
        assert cardinality(rank) == expected

    @pytest.mark.parametrize("rank", [0, 1, 2, 3])
    def test_bot_first_and_distinct(self, rank):
        elems = enumerate_rank(rank)
        assert elems[0] == bot(rank)
        assert len(set(elems)) == len(elems)

    def test_index_round_trip(self):
        for u in enumerate_rank(3):
            assert element(3, index_of(u)) == u

    def test_heights(self):
        assert [height(r) for r in range(4)] == [0, 1, 3, 13]

    def test_rank_two_is_a_chain(self):
        elems = enumerate_rank(2)
        for i, j in itertools.combinations(range(len(elems)), 2):
            assert leq(elems[i], elems[j])

    def test_unsupported_rank(self):
        with pytest.raises(RankError):
            bot(5)
        with pytest.raises(RankError):
            enumerate_rank(4)


# =============================================================================
# ORDER AND LUB
# =============================================================================

class TestLattice:
    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_partial_order(self, rank):
        elems = enumerate_rank(rank)
        for u in elems:
            assert leq(u, u)
            assert leq(bot(rank), u)
        for u, w in itertools.product(elems, repeat=2):
            if leq(u, w) and leq(w, u):
                assert u == w

    def test_transitive_rank_three(self):
        elems = enumerate_rank(3)
        above = {u: [w for w in elems if leq(u, w)] for u in elems}
        for u in elems:
            for w in above[u]:
                for v in above[w]:
                    assert leq(u, v)

    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_lub_is_least_upper_bound(self, rank):
        elems = enumerate_rank(rank)
        for u, w in itertools.product(elems, repeat=2):
            j = lub(u, w)
            assert j in elems
            assert leq(u, j) and leq(w, j)
            assert lub(w, u) == j
            for c in elems:
                if leq(u, c) and leq(w, c):
                    assert leq(j, c)

    def test_lub_example(self):
        assert lub(const(3, identity(2)), const(3, bot(2))) == const(3, identity(2))

    def test_rank_mismatch(self):
        with pytest.raises(RankError):
            leq(bot(1), bot(2))


# =============================================================================
# FUNCTIONS
# =============================================================================

class TestFunctions:
    def test_identity_applies(self):
        for a in enumerate_rank(2):
            assert fn_project_apply(identity(3), a) == a

    def test_bot_applies_to_bot(self):
        assert fn_project_apply(bot(2), element(1, 1)) == bot(1)

    def test_const(self):
        c = const(3, identity(2))
        for a in enumerate_rank(2):
            assert fn_project_apply(c, a) == identity(2)

    def test_non_monotone_rejected(self):
        swap = {element(1, 0): element(1, 1), element(1, 1): element(1, 0)}
        with pytest.raises(MonotonicityError):
            fn_make(2, swap)

    def test_identity_at_rank_one_is_constant(self):
        assert identity(1) == const(1, bot(0))

    def test_rank_four_tables(self):
        u = identity(4)
        validate(u)
        assert len(u.fn) == cardinality(3)

    def test_validate_rejects_bad_table(self):
        with pytest.raises(MonotonicityError):
            validate(DomElem(2, (1, 0)))
        with pytest.raises(RankError):
            validate(DomElem(2, (0,)))

    def test_application_rank_mismatch(self):
        with pytest.raises(RankError):
            fn_project_apply(identity(3), bot(1))


# =============================================================================
# EMBEDDING-PROJECTION PAIRS
# =============================================================================

class TestEmbedProject:
    @pytest.mark.parametrize("rank", [0, 1, 2, 3])
    def test_project_after_embed(self, rank):
        for u in enumerate_rank(rank):
            assert project(embed(u)) == u

    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_embed_after_project_is_below(self, rank):
        for w in enumerate_rank(rank):
            assert leq(embed(project(w)), w)

    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_monotone(self, rank):
        elems = enumerate_rank(rank)
        for u, w in itertools.product(elems, repeat=2):
            if leq(u, w):
                assert leq(embed(u), embed(w))
                assert leq(project(u), project(w))

    def test_identity_and_const(self):
        assert project(identity(3)) == identity(2)
        assert project(const(3, identity(2))) == const(2, identity(1))

    def test_convert(self):
        assert domain.convert(identity(4), 2) == identity(2)
        lifted = domain.convert(identity(2), 4)
        assert lifted.rank == 4
        assert domain.convert(lifted, 2) == identity(2)

    def test_project_rank_zero(self):
        with pytest.raises(RankError):
            project(bot(0))


# =============================================================================
# ENVIRONMENTS
# =============================================================================

class TestEnv:
    def test_bot_bindings_dropped(self):
        rho = Env.of(2, {x: bot(2), y: identity(2)})
        assert rho.dom() == {y}
        assert rho(x) == bot(2)
        assert rho(z) == bot(2)

    def test_equality_ignores_binding_order(self):
        assert Env.of(2, {x: identity(2), y: const(2, bot(1))}) == Env.of(2, {y: const(2, bot(1)), x: identity(2)})

    def test_rank_checked(self):
        with pytest.raises(RankError):
            Env.of(2, {x: identity(3)})

    def test_json(self):
        rho = Env.of(3, {x: const(3, identity(2))})
        assert Env.from_json(rho.to_json()) == rho

    def test_json_rejects_non_monotone(self):
        with pytest.raises(MonotonicityError):
            Env.from_json({"rank": 2, "bindings": {"x": {"rank": 2, "fn": [1, 0]}}})

    def test_str(self):
        assert str(Env.of(2, {x: identity(2)})) == "{x ↦ Fn(λx.x)}"

    def test_lub(self):
        rho = Env.of(2, {x: const(2, bot(1))})
        other = Env.of(2, {x: identity(2), y: identity(2)})
        assert env_lub(rho, other) == Env.of(2, {x: identity(2), y: identity(2)})

    def test_restrict_and_subtract(self):
        rho = Env.of(2, {x: identity(2), y: identity(2)})
        assert env_restrict(rho, {x}).dom() == {x}
        assert env_subtract(rho, {x}).dom() == {y}

    def test_update(self):
        rho = Env.of(2, {x: identity(2), y: identity(2)})
        other = Env.of(2, {x: const(2, bot(1))})
        updated = env_update(rho, other, {x, y})
        assert updated == Env.of(2, {x: const(2, bot(1))})

    def test_orders(self):
        small = Env.of(2, {x: const(2, bot(1))})
        big = Env.of(2, {x: identity(2), y: identity(2)})
        assert env_leq(small, big)
        assert not env_le(small, big)
        assert env_le(Env.of(2, {y: identity(2)}), big)
        assert env_le(Env.bottom(2), big)

    def test_lift(self):
        rho = Env.of(2, {x: identity(2)})
        assert lift_env(rho, 3) == Env.of(3, {x: embed(identity(2))})
        assert lift_env(lift_env(rho, 3), 2) == rho


# =============================================================================
# FIXED POINTS
# =============================================================================

class TestFixpoints:
    def test_constant_step(self):
        assert lfp_env(lambda rho: rho, 2, [x]) == Env.bottom(2)

    def test_kleene_iterations(self):
        top = element(1, 1)
        result, iterations = kleene(lambda rho: Env.of(1, {x: lub(rho(x), top)}), Env.bottom(1), 10)
        assert result == Env.of(1, {x: top})
        assert iterations == 2

    def test_chain_reaches_fixpoint(self):
        def step(rho):
            # x climbs the rank-2 chain one element per iteration
            i = index_of(rho(x))
            return Env.of(2, {x: element(2, min(i + 1, 3))})

        assert lfp_env(step, 2, [x]) == Env.of(2, {x: element(2, 3)})

    def test_non_monotone_step(self):
        top = element(1, 1)

        def step(rho):
            return Env.of(1, {x: top}) if rho(x).is_bot else Env.bottom(1)

        with pytest.raises(FixpointError):
            lfp_env(step, 1, [x])

    def test_cap_exceeded(self):
        def step(rho):
            i = index_of(rho(x))
            return Env.of(2, {x: element(2, min(i + 1, 3))})

        with pytest.raises(FixpointError):
            kleene(step, Env.bottom(2), 2)


# =============================================================================
# DISPLAY
# =============================================================================

class TestDescribe:
    def test_forms(self):
        assert describe(bot(2)) == "⊥"
        assert describe(identity(2)) == "Fn(λx.x)"
        assert describe(const(2, bot(1))) == "Fn(λ_.⊥)"
        assert describe(const(3, identity(2))) == "Fn(λ_.Fn(λx.x))"

    def test_table(self):
        assert describe(identity(2), show_table=True) == "{0 ↦ 0, 1 ↦ 1}"

    def test_json_bot(self):
        assert bot(3).to_json() == "bot"
        assert DomElem.from_json("bot", 3) == bot(3)


@settings(max_examples=50, deadline=None)
@given(elements(3), elements(3))
def test_embedding_preserves_order_at_rank_four(u, w):
    assert leq(u, w) == leq(embed(u), embed(w))
