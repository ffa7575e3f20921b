"""
Natural semantics - the original big-step rules as a fuel-bounded evaluator.

    Γ : e ⇓ Δ : v      e under heap Γ reduces to the value v with final heap Δ

Rules: Lam (axiom), App (evaluate the function, then the substituted body),
Var (blackhole the binding, evaluate it, write the value back) and Let
(freshen the binders, move them to the heap, evaluate the body).

Every derivation node costs one unit of fuel from a budget shared by the
whole derivation, so a successful run at fuel n succeeds identically at any
larger fuel. Divergence, blackholes and unbound variables come back as
result values.
"""

import logging
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

from .syntax import App, Expr, Heap, Lam, Let, Name, Var, all_names, fresh, heap_print, print_expr, subst

logger = logging.getLogger(__name__)

DEFAULT_FUEL = 64


class NatStatus(str, Enum):
    """Outcome of an evaluation."""
    SUCCESS = "success"
    DIVERGED = "diverged"
    BLACKHOLE = "blackhole"
    UNBOUND = "unbound_var"


class Rule(str, Enum):
    LAM = "Lam"
    APP = "App"
    VAR = "Var"
    LET = "Let"


PREMISES = {Rule.LAM: 0, Rule.APP: 2, Rule.VAR: 1, Rule.LET: 1}


@dataclass(frozen=True)
class DerivTrace:
    """
    One node of a derivation tree.

    `input` and `output` pair a heap with the expression side of the
    judgment: an Expr for the natural semantics, a Stack for the stacked one.
    """
    rule: Rule
    input: Tuple[Heap, Any]
    output: Tuple[Heap, Any]
    children: Tuple["DerivTrace", ...] = ()

    def nodes(self) -> int:
        return 1 + sum(c.nodes() for c in self.children)

    def rule_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        stack = [self]
        while stack:
            node = stack.pop()
            counts[node.rule.value] = counts.get(node.rule.value, 0) + 1
            stack.extend(node.children)
        return counts

    def walk(self):
        """Pre-order iteration over all nodes."""
        yield self
        for child in self.children:
            yield from child.walk()

    def to_dict(self) -> Dict[str, Any]:
        heap_in, side_in = self.input
        heap_out, side_out = self.output
        if isinstance(side_in, Expr):
            inp = {"heap": heap_print(heap_in), "expr": print_expr(side_in)}
            out = {"heap": heap_print(heap_out), "value": print_expr(side_out)}
        else:
            inp = {"heap": heap_print(heap_in), "stack": str(side_in)}
            out = {"heap": heap_print(heap_out), "stack": str(side_out)}
        return {
            "rule": self.rule.value,
            "input": inp,
            "output": out,
            "children": [c.to_dict() for c in self.children],
        }


@dataclass
class NatResult:
    """Result of eval_nat (and run_via_stack)."""
    status: NatStatus
    heap: Optional[Heap] = None
    value: Optional[Lam] = None
    trace: Optional[DerivTrace] = None
    name: Optional[Name] = None           # offending variable for BLACKHOLE / UNBOUND
    fuel_used: int = 0

    def is_success(self) -> bool:
        return self.status == NatStatus.SUCCESS

    def describe(self) -> str:
        if self.status == NatStatus.SUCCESS:
            return f"{heap_print(self.heap)} : {print_expr(self.value)}"
        if self.name is not None:
            return f"{self.status.value}: {self.name}"
        return self.status.value

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"status": self.status.value, "fuel_used": self.fuel_used}
        if self.status == NatStatus.SUCCESS:
            data["heap"] = self.heap.to_dict()
            data["value"] = print_expr(self.value)
        if self.name is not None:
            data["name"] = str(self.name)
        return data


# =============================================================================
# SHARED MACHINERY
# =============================================================================

class Stuck(Exception):
    """Unwinds a derivation that cannot be completed."""

    def __init__(self, status: NatStatus, name: Optional[Name] = None):
        self.status = status
        self.name = name
        super().__init__(status.value)


class Budget:
    """Fuel counter plus the avoid set threaded through a whole derivation."""

    def __init__(self, fuel: int, avoid: Iterable[Name]):
        self.fuel = fuel
        self.used = 0
        self.avoid: Set[Name] = set(avoid)

    def spend(self) -> None:
        if self.used >= self.fuel:
            raise Stuck(NatStatus.DIVERGED)
        self.used += 1

    def fresh(self, base: Name) -> Name:
        name = fresh(self.avoid, base)
        self.avoid.add(name)
        return name

    def subst(self, e: Expr, x: Name, y: Name) -> Expr:
        result = subst(e, x, y, self.avoid)
        self.avoid |= all_names(result)
        return result

    def freshen_let(self, e: Let) -> Tuple[List[Tuple[Name, Expr]], Expr]:
        """Rename every let binder to a name fresh for the derivation so far."""
        renaming = [(old, self.fresh(old)) for old in e.binders]
        bindings = list(e.bindings)
        body = e.body
        for old, new in renaming:
            bindings = [(n, self.subst(r, new, old)) for n, r in bindings]
            body = self.subst(body, new, old)
        new_names = dict(renaming)
        return [(new_names[n], r) for n, r in bindings], body


def initial_avoid(heap: Heap, e: Expr, extra: Iterable[Name] = ()) -> Set[Name]:
    """Every name occurring in the configuration."""
    return set(extra) | heap.all_names() | all_names(e)


def ensure_recursion_limit(fuel: int) -> None:
    # each derivation node uses a handful of Python frames
    wanted = 8 * fuel + 1000
    if sys.getrecursionlimit() < wanted:
        sys.setrecursionlimit(wanted)


# =============================================================================
# EVALUATOR
# =============================================================================

class _NaturalMachine:

    def __init__(self, budget: Budget):
        self.budget = budget
        self.under_evaluation: Set[Name] = set()

    def eval(self, heap: Heap, e: Expr) -> Tuple[Heap, Lam, DerivTrace]:
        self.budget.spend()
        if isinstance(e, Lam):
            return heap, e, DerivTrace(Rule.LAM, (heap, e), (heap, e))

        if isinstance(e, App):
            delta, fun, t1 = self.eval(heap, e.fun)
            body = self.budget.subst(fun.body, e.arg, fun.binder)
            theta, value, t2 = self.eval(delta, body)
            return theta, value, DerivTrace(Rule.APP, (heap, e), (theta, value), (t1, t2))

        if isinstance(e, Var):
            x = e.name
            rhs = heap.get(x)
            if rhs is None:
                if x in self.under_evaluation:
                    raise Stuck(NatStatus.BLACKHOLE, x)
                raise Stuck(NatStatus.UNBOUND, x)
            self.under_evaluation.add(x)
            try:
                delta, value, t1 = self.eval(heap.remove(x), rhs)
            finally:
                self.under_evaluation.discard(x)
            result = delta.extend([(x, value)])
            return result, value, DerivTrace(Rule.VAR, (heap, e), (result, value), (t1,))

        if isinstance(e, Let):
            bindings, body = self.budget.freshen_let(e)
            delta, value, t1 = self.eval(heap.extend(bindings), body)
            return delta, value, DerivTrace(Rule.LET, (heap, e), (delta, value), (t1,))

        raise TypeError(f"Not an expression: {e!r}")


def eval_nat(
    heap: Heap,
    e: Expr,
    avoid: Optional[Iterable[Name]] = None,
    fuel: int = DEFAULT_FUEL,
) -> NatResult:
    """
    Evaluate e under heap with the natural semantics.

    Args:
        heap: Initial heap Γ
        e: Expression to evaluate
        avoid: Names fresh names must avoid; every name of (Γ, e) is always added
        fuel: Maximum number of derivation nodes

    Returns:
        NatResult; SUCCESS carries the final heap, the value and the derivation
    """
    ensure_recursion_limit(fuel)
    budget = Budget(fuel, initial_avoid(heap, e, avoid or ()))
    machine = _NaturalMachine(budget)
    try:
        delta, value, trace = machine.eval(heap, e)
    except Stuck as stuck:
        logger.debug("eval_nat stuck: %s %s after %d nodes", stuck.status.value, stuck.name, budget.used)
        return NatResult(stuck.status, name=stuck.name, fuel_used=budget.used)
    return NatResult(NatStatus.SUCCESS, delta, value, trace, fuel_used=budget.used)
