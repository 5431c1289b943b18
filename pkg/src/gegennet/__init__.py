"""Link sign prediction on signed bipartite graphs with polynomial spectral filters."""

from .analysis import SpectralSignal, fit_report, spectral_signal
from .estimator import GegenNetClassifier, SpectralInitializer
from .features import SpectralFeatures, combine_features, inter_partition_features, \
    intra_partition_features, random_features, spectral_features
from .filters import FilterCurve, GegenbauerParams, classic_filter_curve, \
    gegenbauer_apply, gegenbauer_closed_form, gegenbauer_scalar, proximity_matrix, \
    recurrence_weights
from .graph import EdgeListFormat, EdgeSplit, GraphFormatError, SignMatrices, \
    SignedBipartiteGraph, build_sign_matrices, cosine_block_matrix, laplacian, \
    load_edge_list, load_split, normalize_adjacency, parse_edge_list, save_split, \
    split_edges, symmetrize
from .linalg import ConvergenceError, EigenPairs, dense_eig, smallest_eigenpairs, \
    spmm, top_left_singular_vectors
from .metrics import Metrics, evaluate, rank_auc
from .model import ForwardCache, ModelConfig, ModelParams, TrainingDivergedError, \
    TrainResult, backward, bce_loss, bce_loss_grad, forward, init_params, \
    linearized_forward, load_checkpoint, predict_scores, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "EdgeListFormat",
    "EdgeSplit",
    "EigenPairs",
    "FilterCurve",
    "ForwardCache",
    "GegenNetClassifier",
    "GegenbauerParams",
    "GraphFormatError",
    "Metrics",
    "ModelConfig",
    "ModelParams",
    "SignMatrices",
    "SignedBipartiteGraph",
    "SpectralFeatures",
    "SpectralInitializer",
    "SpectralSignal",
    "TrainResult",
    "TrainingDivergedError",
    "backward",
    "bce_loss",
    "bce_loss_grad",
    "build_sign_matrices",
    "classic_filter_curve",
    "combine_features",
    "cosine_block_matrix",
    "dense_eig",
    "evaluate",
    "fit_report",
    "forward",
    "gegenbauer_apply",
    "gegenbauer_closed_form",
    "gegenbauer_scalar",
    "init_params",
    "inter_partition_features",
    "intra_partition_features",
    "laplacian",
    "linearized_forward",
    "load_checkpoint",
    "load_edge_list",
    "load_split",
    "normalize_adjacency",
    "parse_edge_list",
    "predict_scores",
    "proximity_matrix",
    "random_features",
    "rank_auc",
    "recurrence_weights",
    "save_checkpoint",
    "save_split",
    "smallest_eigenpairs",
    "spectral_features",
    "spectral_signal",
    "split_edges",
    "spmm",
    "symmetrize",
    "top_left_singular_vectors",
    "train",
]
