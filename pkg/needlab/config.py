"""
Configuration models for needlab.

GenConfig drives the generators and the verification suite; CliConfig is the
validated form of the command line. Both are pydantic models, so out-of-range
values raise pydantic.ValidationError at construction.
"""

import os
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field

from .domain import DEFAULT_RANK, R_TABLE

# Environment variables consulted by GenConfig.from_env
ENV_VARS = {
    "seed": "NEEDLAB_SEED",
    "cases": "NEEDLAB_CASES",
    "rank": "NEEDLAB_RANK",
    "fuel": "NEEDLAB_FUEL",
}


class GenConfig(BaseModel):
    """Generator and suite settings. (seed, settings) fully determine every generated case."""
    seed: int = Field(default=0, ge=-(2 ** 63), lt=2 ** 64)
    max_expr_size: int = Field(default=8, ge=1)
    max_heap_bindings: int = Field(default=4, ge=1)
    rank: int = Field(default=DEFAULT_RANK, ge=1, le=R_TABLE)
    fuel: int = Field(default=64, ge=1)
    cases: int = Field(default=300, ge=1)
    min_nonvacuous: int = Field(default=50, ge=0)
    env_bias: float = Field(default=0.4, ge=0.0, le=1.0)  # probability of bot per env binding
    jobs: int = Field(default=1, ge=1)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @property
    def quota(self) -> int:
        """Non-vacuous cases a conditional property must reach."""
        return min(self.min_nonvacuous, self.cases // 2)

    @classmethod
    def from_env(cls, **overrides: Any) -> "GenConfig":
        """Defaults, then NEEDLAB_* environment variables, then explicit overrides (None ignored)."""
        values: Dict[str, Any] = {}
        for field_name, var in ENV_VARS.items():
            raw = os.environ.get(var)
            if raw:
                values[field_name] = raw
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class Subcommand(str, Enum):
    EVAL = "eval"
    DENOTE = "denote"
    CHECK = "check"
    COUNTEREXAMPLE = "counterexample"


class Semantics(str, Enum):
    NATURAL = "natural"
    STACKED = "stacked"


class Suite(str, Enum):
    ALL = "all"
    THEOREMS = "theorems"
    LEMMAS = "lemmas"
    COUNTEREXAMPLES = "counterexamples"
    EQUIVALENCE = "equivalence"


class CliConfig(BaseModel):
    """Validated command line."""
    subcommand: Subcommand
    program: Optional[str] = None
    semantics: Semantics = Semantics.NATURAL
    fuel: Optional[int] = Field(default=None, ge=1)
    trace: bool = False
    heap_file: Optional[str] = None
    rank: Optional[int] = Field(default=None, ge=1, le=R_TABLE)
    variant: str = Field(default="join", pattern="^(join|update)$")
    env_file: Optional[str] = None
    show_table: bool = False
    suite: Suite = Suite.ALL
    cases: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None
    jobs: int = Field(default=1, ge=1)
    json_output: bool = False
    strict: bool = False
    timings: bool = False
    report_file: Optional[str] = None

    model_config = ConfigDict(extra="forbid")

    def gen_config(self) -> GenConfig:
        return GenConfig.from_env(
            seed=self.seed, cases=self.cases, rank=self.rank, fuel=self.fuel, jobs=self.jobs
        )
