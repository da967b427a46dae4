"""Desk-scale numerical lab for isometric shift representations, inner-function
multipliers, and inverse-semigroup window checks."""

from .errors import (
    BoundTooSmall,
    InvalidSymbol,
    IsolabError,
    MonomialSymbol,
    NotAMember,
    NotCommuting,
    ProbeExhausted,
    SingularAtomHit,
    SizeMismatch,
    UnknownGenerator,
)
from .inner import (
    AtomicSingularPart,
    BlaschkeFactor,
    InnerSymbol,
    format_symbol,
    is_monomial,
    is_monomial_numeric,
    multiply,
    parse_symbol,
)
from .operators import (
    SemigroupSpec,
    TruncatedOperator,
    adjoint,
    approx_equal,
    compose,
    direct_sum,
    dump_operator,
    identity,
    is_isometry_on_probe,
    isometry_defect,
    kernel_of_adjoint,
    load_operator,
    mult_operator,
    mult_operator_from_coeffs,
    probe_distance,
    regular_rep,
    shift_matrix,
    swap_unitary,
)
from .words import (
    Generator,
    GeneratorSystem,
    InverseCheckReport,
    StarWord,
    bicyclic_normal_form,
    bicyclic_word,
    check_inverse,
    enumerate_ball,
    parse_word,
    reduce_word,
)
from .experiments import (
    ExtensionCandidate,
    RankProfile,
    SymbolExtraction,
    doubled_shift_system,
    extract_symbol,
    hankel_rank,
    multiplier_family_system,
    multiplier_system,
    multiplier_triviality_experiment,
    noninverse_multiplier_experiment,
    proper_extension_experiment,
    regular_rep_experiment,
    regular_rep_system,
    validate_extension,
)

__version__ = "0.1.0"
