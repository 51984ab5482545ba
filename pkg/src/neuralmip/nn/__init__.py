from .checkpoint import CheckpointError, checkpoint_bytes, load_checkpoint, save_checkpoint
from .layers import (
    ShapeError,
    bipartite_conv,
    chebyshev_conv,
    edge_conditioned_conv,
    glorot,
    temporal_gated_conv,
)
from .losses import accuracy_per_dim, branching_loss, diving_loss, diving_prob, probabilities
from .models import (
    MbInputs,
    ModelConfig,
    ParamStore,
    PiInputs,
    init_params,
    mb_gcn_forward,
    mb_inputs,
    pi_gcn_forward,
    pi_inputs,
)
from .optim import AdamState, GradCheckReport, TrainConfig, adam_step, finite_diff_check
from .tensor import Tensor, parameter

__all__ = [
    "AdamState", "CheckpointError", "GradCheckReport", "MbInputs", "ModelConfig", "ParamStore",
    "PiInputs", "ShapeError", "Tensor", "TrainConfig", "accuracy_per_dim", "adam_step",
    "bipartite_conv", "branching_loss", "chebyshev_conv", "checkpoint_bytes", "diving_loss",
    "diving_prob", "edge_conditioned_conv", "finite_diff_check", "glorot", "init_params",
    "load_checkpoint", "mb_gcn_forward", "mb_inputs", "parameter", "pi_gcn_forward",
    "pi_inputs", "probabilities", "save_checkpoint", "temporal_gated_conv",
]
