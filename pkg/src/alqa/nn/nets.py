"""Network builders for the defect classifier."""

from __future__ import annotations

import numpy as np

from alqa.errors import ConfigurationError
from alqa.nn.layers import (
    BasicBlock,
    BatchNorm2d,
    Conv2d,
    GlobalAvgPool,
    Linear,
    MaxPool2d,
    ReLU,
    Sequential,
)

SMALL_CNN_CHANNELS = (8, 16, 32, 64)


def build_small_cnn(num_classes: int, rng: np.random.Generator,
                    channels: tuple[int, ...] = SMALL_CNN_CHANNELS) -> Sequential:
    """Four conv blocks + global pooling + linear head; desk-scale CPU size.

    The stem convolves at stride 2 and pools, so later blocks run on small
    feature maps; the whole net stays well under 500k parameters.
    """
    c1, c2, c3, c4 = channels
    return Sequential([
        Conv2d(3, c1, 3, 2, 1, rng), BatchNorm2d(c1), ReLU(), MaxPool2d(2, 2),
        Conv2d(c1, c2, 3, 1, 1, rng), BatchNorm2d(c2), ReLU(), MaxPool2d(2, 2),
        Conv2d(c2, c3, 3, 1, 1, rng), BatchNorm2d(c3), ReLU(), MaxPool2d(2, 2),
        Conv2d(c3, c4, 3, 1, 1, rng), BatchNorm2d(c4), ReLU(), MaxPool2d(2, 2),
        GlobalAvgPool(),
        Linear(c4, num_classes, rng),
    ])


def build_resnet18(num_classes: int, rng: np.random.Generator) -> Sequential:
    """The 18-layer residual network, faithful widths (64..512)."""
    layers = [
        Conv2d(3, 64, 7, 2, 3, rng), BatchNorm2d(64), ReLU(), MaxPool2d(3, 2, 1),
    ]
    cin = 64
    for cout, stride in ((64, 1), (128, 2), (256, 2), (512, 2)):
        layers.append(BasicBlock(cin, cout, stride, rng))
        layers.append(BasicBlock(cout, cout, 1, rng))
        cin = cout
    layers += [GlobalAvgPool(), Linear(512, num_classes, rng)]
    return Sequential(layers)


def build_net(architecture: str, num_classes: int, rng: np.random.Generator) -> Sequential:
    if architecture == "small_cnn":
        return build_small_cnn(num_classes, rng)
    if architecture == "resnet18":
        return build_resnet18(num_classes, rng)
    raise ConfigurationError(f"unknown architecture {architecture!r}")


def count_parameters(net: Sequential) -> int:
    return sum(p.value.size for p in net.params())
