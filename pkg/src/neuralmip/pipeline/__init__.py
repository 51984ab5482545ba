from .config import ConfigError, ExperimentConfig
from .data import (BranchingSample, DatasetError, DivingSample, InstanceRecord,
                   collect_branching_dataset, collect_diving_dataset, generate_scenarios,
                   instances_from_records, load_branching_dataset, load_diving_dataset)
from .evaluation import (ACC_THRESHOLDS, EvaluationError, Model, NeuralBranching, accuracy_counts,
                         evaluate_branching, evaluate_diving, evaluate_joint, gap_curve, plot_data,
                         report_graph_sizes, top1_agreement)
from .training import MODEL_KINDS, TrainingError, TrainResult, majority_labels, train

__all__ = [
    "ACC_THRESHOLDS", "BranchingSample", "ConfigError", "DatasetError", "DivingSample",
    "EvaluationError", "ExperimentConfig", "InstanceRecord", "MODEL_KINDS", "Model",
    "NeuralBranching", "TrainResult", "TrainingError", "accuracy_counts",
    "collect_branching_dataset", "collect_diving_dataset", "evaluate_branching",
    "evaluate_diving", "evaluate_joint", "gap_curve", "generate_scenarios",
    "instances_from_records", "load_branching_dataset", "load_diving_dataset",
    "majority_labels", "plot_data", "report_graph_sizes", "top1_agreement", "train",
]
