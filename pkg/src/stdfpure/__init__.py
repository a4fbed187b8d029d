"""Estimation of max-linear stable tail dependence functions under a
pure-variable assumption."""
from .chi import (
    ChiMatrix,
    DataMatrix,
    LoadingMatrix,
    RankMatrix,
    compute_ranks,
    empirical_chi,
    population_chi,
    preasymptotic_chi_maxlinear,
    stdf_eval,
)
from .errors import AlignmentError, GenerationError, InputError, ParameterError, StdfError
from .htsp import HtspEstimate, hard_threshold, htsp, initial_rows, simplex_project, simplex_project_support
from .hyperparams import (
    HyperParams,
    adaptive_k,
    adaptive_kappa,
    kappa0,
    signal_strength,
    sparsity_index,
)
from .metrics import (
    MetricsReport,
    align,
    evaluate,
    extremal_directions,
    hungarian,
    loss_inf2,
    tfnp_tfpp,
)
from .purevar import PureVarResult, ThresholdGraph, build_graph, max_clique, pure_var
from .simgen import ModelSpec, gen_loading_matrix, sample_dataset, sample_pareto

__version__ = "0.1.0"
