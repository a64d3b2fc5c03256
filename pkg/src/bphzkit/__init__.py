"""Symbolic and numeric toolkit for decorated-tree renormalization.

Subpackages split along the pipeline: tree combinatorics (`trees`,
`grammar`), degree bookkeeping (`degrees`), family generation from
subcritical rules (`rules`), coproducts and renormalization maps
(`hopf`), periodic grids and kernel numerics (`grids`, `kernels`),
model evaluation and norms (`models`), and the estimation / verification
experiments (`lab`), wired together by `config` and `cli`.
"""

from .trees import (
    DecoratedTree,
    Edge,
    EdgeLabel,
    FormalSum,
    MultiIndex,
    graft,
    noise_edges,
    scaled_size,
    shift_edges,
    tree_product,
    unit_tree,
    x_power,
)
from .grammar import TreeParseError, format_tree, parse_tree
from .degrees import INF, DegreeIndex, StructureParams, degree, integrability
from .rules import (
    PRESETS,
    Rule,
    SubcriticalityError,
    TreeFamily,
    bphz_compare,
    check_eps_admissible,
    check_variance_condition,
    derived_families,
    generate_B,
    plus_generators,
    preset,
)
from .hopf import (
    Character,
    antipode_plus,
    coaction,
    coproduct_plus,
    counit,
    renorm_M,
    renorm_R,
)
from .grids import NOISE_LAWS, Grid, GridField, sample_noise
from .kernels import apply_calK, bank_for, h_norm, mollify, weighted_lp_norm
from .models import (
    Model,
    ModelNormReport,
    hom_norm_sets,
    model_distance,
    model_norms,
    naive_interpret,
    renorm_interpret,
)
from .config import Config, ConfigError, fingerprint, load_config
from .lab import (
    BphzEstimate,
    ExperimentReport,
    binomial_identity_sweep,
    dual_pairing_sweep,
    estimate_bphz,
    recheck_centering,
    second_moment_oracle,
    tail_experiment,
    tci_bookkeeping,
    verify_binomial_identity,
    verify_holder_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
