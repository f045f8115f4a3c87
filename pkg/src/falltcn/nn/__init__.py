from .layers import (
    BatchNorm1d,
    Conv1d,
    Dropout,
    GlobalAvgPool,
    Param,
    ReLU,
)
from .losses import cross_entropy, mse_loss
from .optim import Adam, StepDecay
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, grad_check

__all__ = [
    "Adam",
    "BatchNorm1d",
    "Conv1d",
    "Dropout",
    "GlobalAvgPool",
    "GradCheckReport",
    "Param",
    "ReLU",
    "StepDecay",
    "cross_entropy",
    "grad_check",
    "load_checkpoint",
    "mse_loss",
    "save_checkpoint",
]
