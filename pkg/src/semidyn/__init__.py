"""Escaping sets, singular orbits and hyperbolicity evidence for
finitely generated semigroups of entire transcendental maps.

The package turns maps written in a small exp-affine expression
language into compiled evaluation tapes, classifies pixel grids by
truncated escape behavior under all semigroup words up to a length
bound, propagates singular values through compositions, approximates
post-singular sets as point clouds, and scores hyperbolicity and
unbounded-component evidence.  Everything downstream of a config is
deterministic; thread count only changes wall time.
"""
from .expr import (
    Compose,
    Constant,
    Exp,
    ExpressionTooLarge,
    ExprError,
    Iterate,
    MapExpr,
    Negate,
    ParseError,
    Product,
    Sum,
    UnboundParameterError,
    Variable,
    compose,
    format_expr,
    is_transcendental,
    iterate,
    node_count,
    normalize,
    parse,
    substitute,
    validate_bindings,
)
from .numerics import (
    EvalOverflow,
    OrbitParams,
    OrbitRecord,
    OrbitStatus,
    compile_tape,
    deriv_at,
    eval_at,
    orbit,
    run_tape,
    run_tape_dual,
)
from .semigroup import (
    AbelianReport,
    PermutabilityResult,
    Semigroup,
    WordCapExceeded,
    abelian_check,
    enumerate_words,
    permutability_check,
    word_expr,
    word_label,
)
from .singular import (
    CloudVerdict,
    Hyperbolicity,
    HyperbolicityReport,
    InvarianceReport,
    PostSingularCloud,
    SingularSet,
    UnsupportedExpression,
    forward_invariance_check,
    hyperbolicity_check,
    post_singular_cloud,
    sample_asymptotic_values,
    singular_values,
)
from .escape import (
    Classification,
    ContainmentReport,
    GridSpec,
    PixelStatus,
    classify_grid,
    classify_single,
    containment_check,
    interior_escaping_mask,
    julia_pixels,
)
from .topology import (
    ComponentReport,
    UnboundednessReport,
    connected_components,
    interior_persistence,
    unboundedness_report,
)
from .config import ConfigError, RunConfig, load_config
from .experiments import EXPERIMENTS, ExperimentResult, run_experiment

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
