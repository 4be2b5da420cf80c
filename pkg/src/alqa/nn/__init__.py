"""Minimal CNN building blocks over the switchable numeric kernels."""

from alqa.nn.layers import (
    BatchNorm2d,
    BasicBlock,
    Conv2d,
    GlobalAvgPool,
    Linear,
    MaxPool2d,
    Param,
    ReLU,
    Sequential,
)
from alqa.nn.nets import build_net, count_parameters
from alqa.nn.optim import Adam

__all__ = [
    "Adam",
    "BasicBlock",
    "BatchNorm2d",
    "Conv2d",
    "GlobalAvgPool",
    "Linear",
    "MaxPool2d",
    "Param",
    "ReLU",
    "Sequential",
    "build_net",
    "count_parameters",
]
