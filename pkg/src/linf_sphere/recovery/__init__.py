"""Sup-norm recovery: truncated kernel ERM, random-feature networks, hard instances."""

from .config import RecoveryConfig, grf_constants, l2_target, threshold_log_gap, truncation_threshold
from .kernel import KernelModel, degree_grams, eval_kernel_model, fit_kernel_erm
from .network import NNModel, fit_nn_erm, project_l1_ball, sampling_width
from .serialization import load_model, loads_model, dumps_model, read_training_csv, save_model
from .spiky import SpikyInstance, make_spiky_instance, relu_network_instance

__all__ = [
    "RecoveryConfig",
    "grf_constants",
    "l2_target",
    "threshold_log_gap",
    "truncation_threshold",
    "KernelModel",
    "degree_grams",
    "eval_kernel_model",
    "fit_kernel_erm",
    "NNModel",
    "fit_nn_erm",
    "project_l1_ball",
    "sampling_width",
    "load_model",
    "loads_model",
    "dumps_model",
    "read_training_csv",
    "save_model",
    "SpikyInstance",
    "make_spiky_instance",
    "relu_network_instance",
]
