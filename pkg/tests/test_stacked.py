"""
Tests for needlab.stacked - the stacked semantics and its agreement with
the natural semantics.
"""

import pytest
from hypothesis import given, settings

from needlab.errors import ScopeError
from needlab.natural import NatStatus, eval_nat
from needlab.stacked import Stack, check_stack_trace, combined, eval_stacked, run_via_stack
from needlab.syntax import App, Heap, Name, Var, heap_alpha_eq, parse
from strategies import closed_configs

x, y, z, u = Name("x"), Name("y"), Name("z"), Name("u")
IDENTITY_SELF = r"let i = \x. x in i i"


# =============================================================================
# STACK
# =============================================================================

class TestStack:
    def test_top_and_tail(self):
        stack = Stack.of((z, Var(x)), (u, App(Var(z), y)))
        assert stack.top == (z, Var(x))
        assert stack.tail == ((u, App(Var(z), y)),)
        assert stack.names() == (z, u)

    def test_duplicate_frames(self):
        with pytest.raises(ScopeError):
            Stack.of((z, Var(x)), (z, Var(y)))

    def test_with_top(self):
        stack = Stack.of((z, Var(x)), (u, Var(z)))
        assert stack.with_top(Var(y)).frames == ((z, Var(y)), (u, Var(z)))

    def test_to_dict_is_ordered(self):
        data = Stack.of((z, Var(x))).to_dict()
        assert data == {"ordered": True, "bindings": [["z", "x"]]}

    def test_combined(self):
        heap = Heap.of((x, parse(r"\a. a")))
        assert combined(heap, Stack.of((z, Var(x)))).names() == (x, z)


# =============================================================================
# EVALUATION
# =============================================================================

class TestEvalStacked:
    def test_value_on_top(self):
        stack = Stack.of((z, parse(r"\x. x")))
        result = eval_stacked(Heap(), stack)
        assert result.is_success()
        assert result.heap == Heap()
        assert result.stack == stack

    def test_variable_lookup(self):
        heap = Heap.of((x, parse(r"\y. y")))
        result = eval_stacked(heap, Stack.of((z, Var(x))))
        assert result.is_success()
        assert result.heap.as_dict() == {x: parse(r"\y. y")}
        assert result.stack == Stack.of((z, parse(r"\y. y")))

    def test_lower_frames_untouched(self):
        heap = Heap.of((x, parse(r"\y. y")))
        stack = Stack.of((z, Var(x)), (u, App(Var(z), x)))
        result = eval_stacked(heap, stack)
        assert result.is_success()
        assert result.stack.tail == stack.tail

    def test_empty_stack(self):
        with pytest.raises(ValueError):
            eval_stacked(Heap(), Stack(()))

    def test_frames_shadowing_heap(self):
        with pytest.raises(ScopeError):
            eval_stacked(Heap.of((z, parse(r"\a. a"))), Stack.of((z, Var(z))))

    def test_blackhole(self):
        result = run_via_stack(Heap.of((x, Var(x))), Var(x))
        assert result.status == NatStatus.BLACKHOLE
        assert result.name == x

    def test_unbound(self):
        result = run_via_stack(Heap(), Var(y))
        assert result.status == NatStatus.UNBOUND

    def test_divergence(self):
        result = run_via_stack(Heap(), parse(r"let f = \a. f a in f f"), fuel=40)
        assert result.status == NatStatus.DIVERGED


class TestStackDiscipline:
    def test_trace_well_formed(self):
        result = eval_stacked(Heap(), Stack.of((z, parse(IDENTITY_SELF))))
        assert result.is_success()
        assert check_stack_trace(result.trace) == []

    def test_trace_with_lower_frame(self):
        heap = Heap.of((x, parse(r"(\a. a) y")), (y, parse(r"\b. b")))
        result = eval_stacked(heap, Stack.of((z, Var(x)), (u, App(Var(z), y))))
        assert result.is_success()
        assert check_stack_trace(result.trace) == []

    def test_stack_to_dict(self):
        result = eval_stacked(Heap(), Stack.of((z, parse(r"\x. x"))))
        data = result.to_dict()
        assert data["status"] == "success"
        assert data["stack"]["bindings"] == [["z", r"\x. x"]]


# =============================================================================
# AGREEMENT WITH THE NATURAL SEMANTICS
# =============================================================================

class TestAgreement:
    def test_identity_applied_to_itself(self):
        natural = eval_nat(Heap(), parse(IDENTITY_SELF))
        stacked = run_via_stack(Heap(), parse(IDENTITY_SELF))
        assert stacked.is_success()
        assert heap_alpha_eq((stacked.heap, stacked.value), (natural.heap, natural.value))
        assert stacked.fuel_used == natural.fuel_used

    def test_update(self):
        heap = Heap.of((x, parse(r"(\a. a) y")), (y, parse(r"\b. b")))
        natural = eval_nat(heap, Var(x))
        stacked = run_via_stack(heap, Var(x))
        assert heap_alpha_eq((stacked.heap, stacked.value), (natural.heap, natural.value), protect={x, y})

    @settings(max_examples=100, deadline=None)
    @given(closed_configs())
    def test_generated(self, config):
        heap, e = config
        natural = eval_nat(heap, e, fuel=64)
        stacked = run_via_stack(heap, e, fuel=64)
        assert stacked.status == natural.status
        if natural.is_success():
            protect = heap.domain()
            assert heap_alpha_eq((stacked.heap, stacked.value), (natural.heap, natural.value), protect=protect)
            assert check_stack_trace(stacked.trace) == []
