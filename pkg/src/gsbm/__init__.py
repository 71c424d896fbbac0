"""Labeled random graphs with latent attributes: generation, spectral
inference of edge-label distributions and edge probabilities, operator
spectrum oracles, and sparse-regime reconstruction thresholds."""

__version__ = "0.1.0"

from .model import (
    BlockKernel,
    FiniteSet,
    FourierKernel,
    IdentifiabilityReport,
    LabelAlphabet,
    LabeledGraph,
    ModelSpec,
    PLUS_MINUS,
    SINGLE_LABEL,
    TWO_LABEL_2G,
    UnitInterval,
    band_kernel,
    check_identifiability,
    generate_graph,
    sample_attributes,
    triangle_kernel,
)
from .spectral import (
    EigensolverError,
    PairEstimates,
    SpectralState,
    WeighingFunction,
    WeightedAdjacency,
    build_weighted_adjacency,
    draw_weighing,
    embed,
    estimate_all_pairs,
    estimate_pair,
    h_epsilon,
    select_epsilon,
    top_eigenpairs,
)
from .operator_spectrum import (
    OperatorSpectrum,
    fourier_spectrum,
    ideal_embedding,
    kernel_distance_sq,
    nystrom_spectrum,
    tail_epsilon_r,
)
from .tree_threshold import (
    SparseParams,
    SurvivalEstimate,
    ThresholdReport,
    TreeInstance,
    coupling_survival,
    posterior_deviation,
    root_posterior,
    sample_forest,
    sample_tree,
    thresholds,
)
from .harness import (
    AlgorithmConfig,
    ConfigError,
    ExperimentConfig,
    MetricsRow,
    baseline_estimates,
    blockwise_procrustes_residual,
    circle_embedding_residual,
    experiment_from_config,
    model_spec_from_config,
    nmse,
    parse_config,
    procrustes_residual,
    run_experiment,
    run_single,
    run_tree_sweep,
)
