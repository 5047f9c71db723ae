"""Link prediction engine: four classic models trained by full-batch gradient
descent, each with an equivalent forward-propagation kernel, plus the
evaluation and diagnostics harness around them."""

from linkprop.graphs import (Graph, NormalizedAdjacency, Partition,
                             ProximityOperator, build_graph, normalize,
                             propagate, proximity)
from linkprop.negatives import NegativeSet, QuotaUnreachable, sample_negatives
from linkprop.losses import (DivergenceError, MaskSet, ModelParams, bce_loss,
                             build_masks, gd_step, loss_gradient, model_loss)
from linkprop.kernel import (KernelConfig, KernelOperator, LinkKernels,
                             ScorePair, SubstepTrace, kernel_step,
                             kernel_step_traced, link_kernels,
                             materialize_kernel, model_config, score_matrices,
                             sign_structure)
from linkprop.training import (TrainConfig, TrainHistory, TrainResult,
                               grid_search, init_embeddings, repeat_train,
                               scoring_embeddings, train)
from linkprop.ranking import (EvalResult, SplitSet, evaluate, metrics_at_k,
                              score_user, top_k)
from linkprop.data_io import (Dataset, ExpectedStats, load_edge_list,
                              split_dataset, verify_stats, write_canonical)

__version__ = "0.1.0"

__all__ = [
    "Graph", "NormalizedAdjacency", "Partition", "ProximityOperator",
    "build_graph", "normalize", "propagate", "proximity",
    "NegativeSet", "QuotaUnreachable", "sample_negatives",
    "DivergenceError", "MaskSet", "ModelParams", "bce_loss", "build_masks",
    "gd_step", "loss_gradient", "model_loss",
    "KernelConfig", "KernelOperator", "LinkKernels", "ScorePair",
    "SubstepTrace", "kernel_step", "kernel_step_traced", "link_kernels",
    "materialize_kernel", "model_config", "score_matrices", "sign_structure",
    "TrainConfig", "TrainHistory", "TrainResult", "grid_search",
    "init_embeddings", "repeat_train", "scoring_embeddings", "train",
    "EvalResult", "SplitSet", "evaluate", "metrics_at_k", "score_user",
    "top_k",
    "Dataset", "ExpectedStats", "load_edge_list", "split_dataset",
    "verify_stats", "write_canonical",
]
