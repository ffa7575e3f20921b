"""
Tests for needlab.natural - the fuel-bounded natural semantics.
"""

from hypothesis import given, settings

from needlab.natural import PREMISES, NatStatus, Rule, eval_nat
from needlab.syntax import Heap, Lam, Name, Var, heap_alpha_eq, parse
from strategies import closed_configs

x, y = Name("x"), Name("y")
IDENTITY_SELF = r"let i = \x. x in i i"


# =============================================================================
# EXAMPLES
# =============================================================================

class TestValues:
    def test_lambda_is_its_own_value(self):
        result = eval_nat(Heap(), parse(r"\x. x"))
        assert result.is_success()
        assert result.heap == Heap()
        assert result.value == Lam(x, Var(x))
        assert result.fuel_used == 1

    def test_variable_bound_to_value(self, ce_heap, ce_value):
        result = eval_nat(ce_heap, Var(x))
        assert result.status == NatStatus.SUCCESS
        assert result.heap.as_dict() == {x: ce_value}
        assert result.value == ce_value
        assert result.trace.rule_counts() == {"Var": 1, "Lam": 1}


class TestLet:
    def test_identity_applied_to_itself(self):
        result = eval_nat(Heap(), parse(IDENTITY_SELF), fuel=20)
        assert result.is_success()
        expected = (Heap.of((Name("i"), parse(r"\x. x"))), parse(r"\x. x"))
        assert heap_alpha_eq((result.heap, result.value), expected)
        assert result.trace.rule_counts() == {"Let": 1, "App": 1, "Var": 2, "Lam": 2}
        assert result.fuel_used == 6

    def test_binders_are_freshened(self):
        result = eval_nat(Heap(), parse(IDENTITY_SELF))
        assert Name("i") not in result.heap

    def test_describe(self):
        result = eval_nat(Heap(), parse(IDENTITY_SELF))
        assert result.describe() == r"{i_1 = \x. x} : \x. x"


class TestUpdate:
    def test_thunk_overwritten_by_value(self):
        heap = Heap.of((x, parse(r"(\a. a) y")), (y, parse(r"\b. b")))
        result = eval_nat(heap, Var(x))
        assert result.is_success()
        assert result.heap.get(x) == parse(r"\b. b")
        assert result.heap.get(y) == parse(r"\b. b")
        assert result.value == parse(r"\b. b")


# =============================================================================
# STUCK EVALUATIONS
# =============================================================================

class TestStuck:
    def test_blackhole(self):
        result = eval_nat(Heap.of((x, Var(x))), Var(x))
        assert result.status == NatStatus.BLACKHOLE
        assert result.name == x
        assert result.describe() == "blackhole: x"

    def test_unbound(self):
        result = eval_nat(Heap(), Var(y))
        assert result.status == NatStatus.UNBOUND
        assert result.name == y
        assert result.heap is None

    def test_divergence_exhausts_fuel(self):
        result = eval_nat(Heap(), parse(r"let f = \a. f a in f f"), fuel=50)
        assert result.status == NatStatus.DIVERGED
        assert result.fuel_used == 50

    def test_fuel_boundary(self):
        e = parse(IDENTITY_SELF)
        assert eval_nat(Heap(), e, fuel=5).status == NatStatus.DIVERGED
        assert eval_nat(Heap(), e, fuel=6).is_success()

    def test_to_dict(self):
        data = eval_nat(Heap.of((x, Var(x))), Var(x)).to_dict()
        assert data == {"status": "blackhole", "fuel_used": 2, "name": "x"}


# =============================================================================
# DERIVATION PROPERTIES
# =============================================================================

class TestDerivation:
    def test_premise_counts(self):
        result = eval_nat(Heap(), parse(IDENTITY_SELF))
        for node in result.trace.walk():
            assert len(node.children) == PREMISES[node.rule]

    def test_nodes_match_fuel(self):
        result = eval_nat(Heap(), parse(IDENTITY_SELF))
        assert result.trace.nodes() == result.fuel_used

    def test_trace_to_dict(self):
        data = eval_nat(Heap(), parse(r"\x. x")).trace.to_dict()
        assert data["rule"] == Rule.LAM.value
        assert data["input"] == {"heap": "{}", "expr": r"\x. x"}
        assert data["children"] == []

    def test_deterministic(self):
        e = parse(IDENTITY_SELF)
        assert eval_nat(Heap(), e) == eval_nat(Heap(), e)

    def test_larger_fuel_same_result(self):
        e = parse(IDENTITY_SELF)
        small = eval_nat(Heap(), e, fuel=6)
        large = eval_nat(Heap(), e, fuel=500)
        assert (small.heap, small.value, small.trace) == (large.heap, large.value, large.trace)


class TestGeneratedConfigurations:
    @settings(max_examples=100, deadline=None)
    @given(closed_configs())
    def test_success_shape(self, config):
        heap, e = config
        result = eval_nat(heap, e, fuel=64)
        if result.is_success():
            assert isinstance(result.value, Lam)
            assert heap.domain() <= result.heap.domain()
            assert result.trace.nodes() == result.fuel_used
        else:
            assert result.status in (NatStatus.DIVERGED, NatStatus.BLACKHOLE)

    @settings(max_examples=100, deadline=None)
    @given(closed_configs())
    def test_fuel_monotone(self, config):
        heap, e = config
        first = eval_nat(heap, e, fuel=40)
        if first.is_success():
            again = eval_nat(heap, e, fuel=80)
            assert again.is_success()
            assert (again.heap, again.value) == (first.heap, first.value)
