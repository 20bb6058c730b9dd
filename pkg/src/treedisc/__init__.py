"""Finite tree-indexed indiscernibility toolkit.

Desk-scale tooling for similarity classification of node tuples in bounded
trees, indiscernibility and basedness checking of parameter maps over
finite relational structures, certified Ramsey-style extraction, tree and
array witness-pattern checks, and homogeneous-selection extractors over
leveled chains and bounded trees.
"""

__version__ = "0.1.0"

from .errors import CapExceededError, InsufficientSourceError, NotIndiscernibleError
from .extraction import (
    ExtractionRequest,
    ExtractionResult,
    OrderExtraction,
    array_extract,
    order_extract,
    ramsey_upper_estimate,
    s_extract,
    str_extract_from_s,
)
from .feq import (
    FeqConfig,
    agreement_formula,
    build_counterexample,
    build_feq_model,
    check_strong_phi_consistency,
    h_map,
    subtree_h,
)
from .indisc import (
    EMTable,
    IndiscReport,
    ParameterMap,
    check_based_on,
    check_indiscernible,
    check_indiscernible_wrt,
    em_satisfies,
    em_table,
)
from .ramsey import (
    Coloring,
    HomogeneousCertificate,
    LeveledChains,
    PerpCode,
    bound_k,
    k_homogeneous,
    perp_code,
    perp_equivalent,
    plus_B,
    polarized_extract,
    tree_homogeneous_extract,
    verify_perp_homogeneous,
    verify_tree_homogeneous,
)
from .similarity import (
    ArrayBounds,
    ArrayCell,
    Lang,
    SimilarityCode,
    check_embedding,
    classify_tuples,
    restriction_preserves_similarity,
    similar,
    similarity_code,
)
from .structures import (
    And,
    Atom,
    Eq,
    Exists,
    Forall,
    Implies,
    Not,
    Or,
    RelDecl,
    RelStructure,
    Signature,
    SplitFormula,
    Var,
    conjoin_params,
    consistent,
    delta_type,
    eval_formula,
    k_inconsistent,
    satisfier_set,
)
from .trees import (
    Kinship,
    NodeTuple,
    TreeDomain,
    TreeNode,
    colex_subsets,
    enumerate_nodes,
    kinship,
    lex_cmp,
    meet,
    meet_closure,
    restrict_tuple,
)
from .treeprops import (
    AdlerReduction,
    TPReport,
    WitnessSpec,
    adler_reduce,
    assemble_tp_dichotomy,
    check_ktp,
    check_ktp1,
    check_ktp2,
    check_strong_ntp,
    check_weak_ktp1,
    compute_N_bound,
    subtree_candidate_arrays,
)
