"""
Stacked semantics - the natural semantics with an explicit evaluation stack.

    Γ : (z ↦ e, Γ') ⇓ Δ : (z ↦ v, Δ')

The topmost frame holds the expression under evaluation; the frames below are
the update frames (z ↦ x) and argument frames (z ↦ w x) that caused it. Only
the topmost expression changes during a derivation.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .natural import (
    Budget,
    DerivTrace,
    NatResult,
    NatStatus,
    Rule,
    Stuck,
    ensure_recursion_limit,
    initial_avoid,
    DEFAULT_FUEL,
)
from .syntax import App, Binding, Expr, Heap, Lam, Let, Name, Var, all_names, fresh, print_expr
from .errors import ScopeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Stack:
    """Ordered named frames, topmost first."""
    frames: Tuple[Binding, ...]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple((n, e) for n, e in self.frames))
        names = [n for n, _ in self.frames]
        if len(set(names)) != len(names):
            raise ScopeError(f"Duplicate stack frame names: {', '.join(map(str, names))}")

    @classmethod
    def of(cls, *frames: Binding) -> "Stack":
        return cls(tuple(frames))

    @property
    def top(self) -> Binding:
        return self.frames[0]

    @property
    def tail(self) -> Tuple[Binding, ...]:
        return self.frames[1:]

    def push(self, *frames: Binding) -> "Stack":
        return Stack(tuple(frames) + self.frames)

    def with_top(self, expr: Expr) -> "Stack":
        return Stack(((self.frames[0][0], expr),) + self.frames[1:])

    def names(self) -> Tuple[Name, ...]:
        return tuple(n for n, _ in self.frames)

    def all_names(self) -> frozenset:
        return frozenset(self.names()).union(*(all_names(e) for _, e in self.frames))

    def __len__(self) -> int:
        return len(self.frames)

    def to_dict(self) -> Dict[str, Any]:
        return {"ordered": True, "bindings": [[str(n), print_expr(e)] for n, e in self.frames]}

    def __str__(self) -> str:
        return "[" + ", ".join(f"{n} = {print_expr(e)}" for n, e in self.frames) + "]"


def combined(heap: Heap, stack: Stack) -> Heap:
    """The heap Γ, Γ' that the correctness statement takes the denotation of."""
    return heap.extend(stack.frames)


@dataclass
class StackResult:
    """Result of eval_stacked."""
    status: NatStatus
    heap: Optional[Heap] = None
    stack: Optional[Stack] = None
    trace: Optional[DerivTrace] = None
    name: Optional[Name] = None
    fuel_used: int = 0

    def is_success(self) -> bool:
        return self.status == NatStatus.SUCCESS

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"status": self.status.value, "fuel_used": self.fuel_used}
        if self.status == NatStatus.SUCCESS:
            data["heap"] = self.heap.to_dict()
            data["stack"] = self.stack.to_dict()
        if self.name is not None:
            data["name"] = str(self.name)
        return data


class _StackMachine:

    def __init__(self, budget: Budget):
        self.budget = budget

    def eval(self, heap: Heap, stack: Stack) -> Tuple[Heap, Stack, DerivTrace]:
        self.budget.spend()
        z, e = stack.top

        if isinstance(e, Lam):
            return heap, stack, DerivTrace(Rule.LAM, (heap, stack), (heap, stack))

        if isinstance(e, App):
            w = self.budget.fresh(Name("w"))
            inner = Stack(((w, e.fun), (z, App(Var(w), e.arg))) + stack.tail)
            delta, after, t1 = self.eval(heap, inner)
            fun = after.top[1]
            body = self.budget.subst(fun.body, e.arg, fun.binder)
            continued = Stack(((z, body),) + after.frames[2:])
            theta, result, t2 = self.eval(delta, continued)
            return theta, result, DerivTrace(Rule.APP, (heap, stack), (theta, result), (t1, t2))

        if isinstance(e, Var):
            x = e.name
            rhs = heap.get(x)
            if rhs is None:
                if x in stack.names():
                    raise Stuck(NatStatus.BLACKHOLE, x)
                raise Stuck(NatStatus.UNBOUND, x)
            delta, after, t1 = self.eval(heap.remove(x), stack.push((x, rhs)))
            value = after.top[1]
            result_heap = delta.extend([(x, value)])
            result_stack = Stack(((z, value),) + after.frames[2:])
            return result_heap, result_stack, DerivTrace(
                Rule.VAR, (heap, stack), (result_heap, result_stack), (t1,)
            )

        if isinstance(e, Let):
            bindings, body = self.budget.freshen_let(e)
            delta, after, t1 = self.eval(heap.extend(bindings), stack.with_top(body))
            return delta, after, DerivTrace(Rule.LET, (heap, stack), (delta, after), (t1,))

        raise TypeError(f"Not an expression: {e!r}")


def eval_stacked(
    heap: Heap,
    stack: Stack,
    avoid: Optional[Iterable[Name]] = None,
    fuel: int = DEFAULT_FUEL,
) -> StackResult:
    """Evaluate the topmost frame of stack under heap with the stacked semantics."""
    if not stack.frames:
        raise ValueError("eval_stacked needs a non-empty stack")
    overlap = heap.domain() & set(stack.names())
    if overlap:
        raise ScopeError(f"Stack frames shadow heap names: {', '.join(sorted(map(str, overlap)))}")
    ensure_recursion_limit(fuel)
    extra = set(avoid or ()) | stack.all_names()
    budget = Budget(fuel, initial_avoid(heap, stack.top[1], extra))
    machine = _StackMachine(budget)
    try:
        delta, result, trace = machine.eval(heap, stack)
    except Stuck as stuck:
        logger.debug("eval_stacked stuck: %s %s after %d nodes", stuck.status.value, stuck.name, budget.used)
        return StackResult(stuck.status, name=stuck.name, fuel_used=budget.used)
    return StackResult(NatStatus.SUCCESS, delta, result, trace, fuel_used=budget.used)


def run_via_stack(
    heap: Heap,
    e: Expr,
    avoid: Optional[Iterable[Name]] = None,
    fuel: int = DEFAULT_FUEL,
) -> NatResult:
    """Evaluate e with the stacked semantics on a one-frame stack [z ↦ e], z fresh."""
    taken = initial_avoid(heap, e, avoid or ())
    z = fresh(taken, Name("z"))
    result = eval_stacked(heap, Stack.of((z, e)), taken | {z}, fuel)
    if not result.is_success():
        return NatResult(result.status, name=result.name, fuel_used=result.fuel_used)
    return NatResult(
        NatStatus.SUCCESS, result.heap, result.stack.top[1], result.trace, fuel_used=result.fuel_used
    )


def check_stack_trace(trace: DerivTrace) -> List[str]:
    """
    Check every node of a stacked derivation for the stack discipline.

    Returns a list of violations (empty when the trace is well-formed):
    frame names and tails preserved, output top is a lambda, and every
    non-top frame is a variable or an application.
    """
    problems: List[str] = []
    for node in trace.walk():
        _, before = node.input
        _, after = node.output
        if before.names() != after.names():
            problems.append(f"{node.rule.value}: frame names changed {before} -> {after}")
        elif before.tail != after.tail:
            problems.append(f"{node.rule.value}: frames below the top changed {before} -> {after}")
        if not isinstance(after.top[1], Lam):
            problems.append(f"{node.rule.value}: top of result stack is not a value: {after}")
        for s in (before, after):
            for n, frame in s.tail:
                if not isinstance(frame, (Var, App)):
                    problems.append(f"{node.rule.value}: frame {n} is neither a variable nor an application")
    return problems
