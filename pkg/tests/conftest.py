"""Shared fixtures for needlab tests."""

import pytest

from needlab import domain
from needlab.config import GenConfig
from needlab.domain import Env
from needlab.syntax import Heap, Name, parse


@pytest.fixture
def small_cfg() -> GenConfig:
    """Few small cases; enough to exercise every property quickly."""
    return GenConfig(seed=7, cases=12, max_expr_size=6, max_heap_bindings=3, min_nonvacuous=3)


@pytest.fixture
def cheap_cfg() -> GenConfig:
    """Rank 2 (compared at ranks 2 and 3) keeps theorem checks fast."""
    return GenConfig(seed=11, cases=15, rank=2, max_expr_size=5, max_heap_bindings=3, min_nonvacuous=3)


@pytest.fixture
def ce_value():
    return parse(r"\a. let b = b in b")


@pytest.fixture
def ce_heap(ce_value) -> Heap:
    return Heap.of((Name("x"), ce_value))


@pytest.fixture
def ce_env() -> Env:
    """ρ x = Fn(λ_.Fn(λz.z)) at rank 3."""
    return Env.of(3, {Name("x"): domain.const(3, domain.identity(2))})
