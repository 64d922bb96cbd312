"""Structure learning for linear polytree structural equation models."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .graphs import (
    Cpdag,
    Dag,
    Skeleton,
    VStructure,
    apply_rule1,
    cpdag_of_polytree,
    enumerate_equivalent_dags,
    equivalence_class_size,
    find_v_structures,
    format_graph,
    is_polytree,
    parse_cpdag,
    parse_dag,
    skeleton,
    vm_vd_partition,
)
from .sem import (
    LinearSem,
    NoiseFamily,
    RhoBounds,
    correlation_by_treks,
    correlation_matrix,
    covariance_matrix,
    format_sem,
    parse_sem,
    rho_bounds,
    sample,
    standardize,
)
from .generate import (
    GenConfig,
    generate_sem,
    hardness_ensemble_cpdag,
    hardness_ensemble_skeleton,
    orient_with_forced_indegree,
    prufer_decode,
    prufer_encode,
    random_prufer_tree,
    sample_betas,
)
from .learn import (
    LearnConfig,
    chow_liu_skeleton,
    detect_v_structures,
    learn,
    learn_cpdag,
    rho_crit,
    sample_correlations,
)
from .precision import estimate_inverse_correlation, l1_errors, true_inverse_correlation
from .metrics import (
    EdgeClassification,
    all_metrics,
    classify_edges,
    fdr_cpdag,
    fdr_skeleton,
    jaccard_cpdag,
    jaccard_skeleton,
)
