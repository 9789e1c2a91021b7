from . import types
from .definition.contracts import (
    DecompositionDiagnostics,
    FitDiagnostics,
    ResidualContract,
    JacobianContract,
    ObjectiveContract,
    GradientContract,
)

from .definition.errors import (
    GpmixError,
    RankBoundError,
    LabelError,
    EmptyOmegaError,
    InvalidViewError,
    ShapeMismatchError,
    NonFiniteInputError,
    ParseError,
    InvalidParamsError,
    DegenerateComponentError,
    RepeatedEigenvalueError,
)

from .configuration import (
    LmOptions,
    SimplexOptions,
    ProjectionConfig,
    FitOptions,
)

from .bootstraping import (
    get_generator,
    get_executor,
    configure_logging,
)

from .symtensor import (
    SymTensor3,
    OmegaTensor,
    FlatView,
    hs_norm,
    omega_norm,
    omega_extract,
    from_rank_one_sum,
    omega_rank_one_sum,
    flat_submatrix,
)

from .assembling import (
    GeneratingMatrix,
    GeneratingMatrixBuilder,
    build_system,
    solve_generating_matrix,
    assemble_N,
)

from .decomp import (
    EigenBundle,
    ScalarFit,
    Decomposition,
    joint_eigen,
    select_eigen,
    fit_scalars,
    decompose,
    approximate,
    estimate_rank,
    nonreal_factors,
    reconstruct,
    align_factors,
)

from .gmm import (
    MomentPair,
    GmmParams,
    FitResult,
    sample_moments,
    exact_moments,
    realify,
    recover_weights,
    joint_refine,
    recover_covariances,
    check_components,
    fit,
    fit_moments,
    log_density,
    classify,
    align_components,
)

from .simulate import (
    SynthInstance,
    TrialReport,
    gen_tensor_trial,
    gen_gmm_instance,
    evaluate_fit,
    run_table1,
    run_table2,
)
