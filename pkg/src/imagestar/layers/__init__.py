"""Per-layer reachability and concrete evaluation."""

from .affine import (
    AvgPoolLayer,
    BatchNormLayer,
    Conv2dLayer,
    FCLayer,
    reach_avgpool,
    reach_batchnorm,
    reach_conv2d,
    reach_fc,
)
from .base import Layer, Scheme
from .maxpool import MaxPoolLayer, reach_maxpool_approx, reach_maxpool_exact
from .relu import ReLULayer, reach_relu_approx, reach_relu_exact, step_relu

LAYER_TYPES = {
    cls.kind: cls
    for cls in (Conv2dLayer, AvgPoolLayer, FCLayer, BatchNormLayer, MaxPoolLayer, ReLULayer)
}


def eval_layer(layer, x):
    """Concrete forward pass of ``layer`` on one ``(h, w, nc)`` image."""
    return layer.evaluate(x)


__all__ = [
    "AvgPoolLayer",
    "BatchNormLayer",
    "Conv2dLayer",
    "FCLayer",
    "LAYER_TYPES",
    "Layer",
    "MaxPoolLayer",
    "ReLULayer",
    "Scheme",
    "eval_layer",
    "reach_avgpool",
    "reach_batchnorm",
    "reach_conv2d",
    "reach_fc",
    "reach_maxpool_approx",
    "reach_maxpool_exact",
    "reach_relu_approx",
    "reach_relu_exact",
    "step_relu",
]
