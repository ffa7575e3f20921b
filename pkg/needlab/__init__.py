"""
needlab - a call-by-need semantics laboratory.

Components:
- syntax: lazy lambda calculus with variable arguments and recursive lets
- natural / stacked: fuel-bounded big-step evaluators with derivation traces
- domain: finite-rank approximations of Value = (Value -> Value)_bot
- denotational: join- and update-based heap semantics over those ranks
- verifier: counterexamples, correctness theorems, equivalence and lemmas

Evaluation outcomes (divergence, blackholes, unbound variables) are result
values; exceptions are reserved for malformed input and interpreter bugs.
"""

from .errors import (
    NeedlabError, ParseError, GeneralApplicationError, HeapFormatError,
    ScopeError, RankError, MonotonicityError, FixpointError,
)
from .syntax import (
    Name, Expr, Var, Lam, App, Let, Heap,
    parse, parse_heap, print_expr, heap_print, desugar_app,
    subst, free_vars, fresh, alpha_eq, heap_alpha_eq,
)
from .natural import NatResult, NatStatus, DerivTrace, Rule, eval_nat
from .stacked import Stack, StackResult, eval_stacked, run_via_stack, check_stack_trace
from .domain import (
    DomElem, Env, R_ENUM, R_TABLE, DEFAULT_RANK,
    enumerate_rank, leq, lub, fn_project_apply, fn_make, embed, project, lfp_env,
    env_lub, env_restrict, env_subtract, env_update, env_dom, env_leq, env_le, lift_env, describe,
)
from .denotational import (
    HeapVariant, Denoter, Verdict, Comparison,
    den_expr, den_heap, preceq, observe, den_eq_stable, den_eq_settled,
)
from .config import GenConfig, CliConfig, Suite
from .gen import Config, gen_config, shrink
from .lemmas import CaseResult, CaseStatus, LEMMAS
from .verifier import (
    CheckReport, Witness, TheoremKind,
    check_counterexample, check_failed_fixes, check_theorem_correctness,
    check_theorem_equivalence, check_lemma, run_suite, MANIFEST, SUITES,
)

__version__ = "0.1.0"

__all__ = [
    # Errors
    "NeedlabError",
    "ParseError",
    "GeneralApplicationError",
    "HeapFormatError",
    "ScopeError",
    "RankError",
    "MonotonicityError",
    "FixpointError",
    # Syntax
    "Name",
    "Expr",
    "Var",
    "Lam",
    "App",
    "Let",
    "Heap",
    "parse",
    "parse_heap",
    "print_expr",
    "heap_print",
    "desugar_app",
    "subst",
    "free_vars",
    "fresh",
    "alpha_eq",
    "heap_alpha_eq",
    # Operational semantics
    "NatResult",
    "NatStatus",
    "DerivTrace",
    "Rule",
    "eval_nat",
    "Stack",
    "StackResult",
    "eval_stacked",
    "run_via_stack",
    "check_stack_trace",
    # Domain
    "DomElem",
    "Env",
    "R_ENUM",
    "R_TABLE",
    "DEFAULT_RANK",
    "enumerate_rank",
    "leq",
    "lub",
    "fn_project_apply",
    "fn_make",
    "embed",
    "project",
    "lfp_env",
    "env_lub",
    "env_restrict",
    "env_subtract",
    "env_update",
    "env_dom",
    "env_leq",
    "env_le",
    "lift_env",
    "describe",
    # Denotational semantics
    "HeapVariant",
    "Denoter",
    "Verdict",
    "Comparison",
    "den_expr",
    "den_heap",
    "preceq",
    "observe",
    "den_eq_stable",
    "den_eq_settled",
    # Config
    "GenConfig",
    "CliConfig",
    "Suite",
    # Verifier
    "Config",
    "gen_config",
    "shrink",
    "CaseResult",
    "CaseStatus",
    "LEMMAS",
    "CheckReport",
    "Witness",
    "TheoremKind",
    "check_counterexample",
    "check_failed_fixes",
    "check_theorem_correctness",
    "check_theorem_equivalence",
    "check_lemma",
    "run_suite",
    "MANIFEST",
    "SUITES",
]
