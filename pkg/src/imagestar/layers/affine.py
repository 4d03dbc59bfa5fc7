"""Layers whose reachable set is one ImageStar with the predicate untouched.

All four act linearly on the generators and affinely on the anchor, so the
anchor and generators go through the same batched kernel in one call and only
the anchor slot receives the bias.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..errors import ShapeError
from .base import Layer, Scheme, pad_batch, pair, quad


def _conv_out(n, k, s, dil, pad):
    return (n + pad - ((k - 1) * dil + 1)) // s + 1


@dataclass(eq=False)
class Conv2dLayer(Layer):
    """2-D cross-correlation; ``weights`` is ``(h_f, w_f, nc, nf)``."""

    weights: np.ndarray
    bias: np.ndarray
    padding: tuple = (0, 0, 0, 0)
    stride: tuple = (1, 1)
    dilation: tuple = (1, 1)
    kind = "conv2d"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim == 2:
            self.weights = self.weights[:, :, None, None]
        if self.weights.ndim != 4:
            raise ShapeError(f"conv weights must be (h_f, w_f, nc, nf), got {self.weights.shape}")
        self.bias = np.asarray(self.bias, dtype=float).reshape(-1)
        if self.bias.size != self.weights.shape[3]:
            raise ShapeError(f"conv bias needs {self.weights.shape[3]} values, got {self.bias.size}")
        self.padding = quad(self.padding, "padding")
        self.stride = pair(self.stride, "stride")
        self.dilation = pair(self.dilation, "dilation")
        if min(self.stride) < 1 or min(self.dilation) < 1:
            raise ShapeError("stride and dilation must be >= 1")

    def output_shape(self, in_shape):
        h, w, nc = in_shape
        hf, wf, cin, nf = self.weights.shape
        if cin != nc:
            raise ShapeError(f"conv filters expect {cin} channels, input has {nc}")
        t, b, l, r = self.padding
        ho = _conv_out(h, hf, self.stride[0], self.dilation[0], t + b)
        wo = _conv_out(w, wf, self.stride[1], self.dilation[1], l + r)
        if ho < 1 or wo < 1:
            raise ShapeError(f"conv output would be {ho}x{wo} for input {h}x{w}")
        return ho, wo, nf

    def _linear(self, X):
        X = np.ascontiguousarray(pad_batch(X, self.padding))
        return _kernels.conv2d(X, np.ascontiguousarray(self.weights), self.stride, self.dilation)

    def forward(self, X):
        self.output_shape(X.shape[:3])
        return self._linear(X) + self.bias[None, None, :, None]

    def reach(self, star, scheme=Scheme.EXACT, budget=None):
        return [reach_conv2d(self, star)]

    def to_dict(self):
        return {
            "type": self.kind,
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "padding": list(self.padding),
            "stride": list(self.stride),
            "dilation": list(self.dilation),
        }


def reach_conv2d(layer, star):
    layer.output_shape(star.shape)
    out = layer._linear(star.basis)
    out[..., 0] += layer.bias[None, None, :]
    return star.with_basis(out)


@dataclass(eq=False)
class AvgPoolLayer(Layer):
    pool_size: tuple = (2, 2)
    padding: tuple = (0, 0, 0, 0)
    stride: tuple = None
    kind = "avgpool"

    def __post_init__(self):
        self.pool_size = pair(self.pool_size, "pool_size")
        self.stride = self.pool_size if self.stride is None else pair(self.stride, "stride")
        self.padding = quad(self.padding, "padding")
        if min(self.pool_size) < 1 or min(self.stride) < 1:
            raise ShapeError("pool size and stride must be >= 1")

    def output_shape(self, in_shape):
        return pool_output_shape(in_shape, self.pool_size, self.stride, self.padding)

    def _linear(self, X):
        X = np.ascontiguousarray(pad_batch(X, self.padding))
        return _kernels.avgpool(X, self.pool_size, self.stride)

    def forward(self, X):
        self.output_shape(X.shape[:3])
        return self._linear(X)

    def reach(self, star, scheme=Scheme.EXACT, budget=None):
        return [reach_avgpool(self, star)]

    def to_dict(self):
        return {
            "type": self.kind,
            "pool_size": list(self.pool_size),
            "padding": list(self.padding),
            "stride": list(self.stride),
        }


def pool_output_shape(in_shape, pool, stride, padding):
    h, w, nc = in_shape
    t, b, l, r = padding
    ho = (h + t + b - pool[0]) // stride[0] + 1
    wo = (w + l + r - pool[1]) // stride[1] + 1
    if ho < 1 or wo < 1:
        raise ShapeError(f"pool {pool} does not fit input {h}x{w}")
    return ho, wo, nc


def reach_avgpool(layer, star):
    layer.output_shape(star.shape)
    return star.with_basis(layer._linear(star.basis))


@dataclass(eq=False)
class FCLayer(Layer):
    """``y = W @ flatten(x) + b``; output shaped ``(1, 1, n_fc)``."""

    weights: np.ndarray
    bias: np.ndarray
    kind = "fc"

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.bias = np.asarray(self.bias, dtype=float).reshape(-1)
        if self.bias.size != self.weights.shape[0]:
            raise ShapeError(f"fc bias needs {self.weights.shape[0]} values, got {self.bias.size}")

    def output_shape(self, in_shape):
        h, w, nc = in_shape
        if self.weights.shape[1] != h * w * nc:
            raise ShapeError(
                f"fc layer expects {self.weights.shape[1]} inputs, got {h}x{w}x{nc} = {h * w * nc}"
            )
        return 1, 1, self.weights.shape[0]

    def forward(self, X):
        self.output_shape(X.shape[:3])
        flat = X.reshape(-1, X.shape[3])
        return (self.weights @ flat + self.bias[:, None])[None, None]

    def reach(self, star, scheme=Scheme.EXACT, budget=None):
        return [reach_fc(self, star)]

    def to_dict(self):
        return {"type": self.kind, "weights": self.weights.tolist(), "bias": self.bias.tolist()}


def reach_fc(layer, star):
    layer.output_shape(star.shape)
    out = layer.weights @ star.flat_basis()
    out[:, 0] += layer.bias
    return star.with_basis(out[None, None])


@dataclass(eq=False)
class BatchNormLayer(Layer):
    """Inference-time batch normalisation with per-channel statistics."""

    mean: np.ndarray
    var: np.ndarray
    epsilon: float = 1e-5
    scale: np.ndarray = field(default=None)
    offset: np.ndarray = field(default=None)
    kind = "batchnorm"

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.var = np.atleast_1d(np.asarray(self.var, dtype=float))
        nc = self.mean.size
        self.scale = np.ones(nc) if self.scale is None else np.atleast_1d(np.asarray(self.scale, dtype=float))
        self.offset = np.zeros(nc) if self.offset is None else np.atleast_1d(np.asarray(self.offset, dtype=float))
        self.epsilon = float(self.epsilon)
        if not (self.var.size == self.scale.size == self.offset.size == nc):
            raise ShapeError("batchnorm parameters must all have one value per channel")
        if np.any(self.var < 0):
            raise ValueError("batchnorm variance must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("batchnorm epsilon must be positive")

    def output_shape(self, in_shape):
        if in_shape[2] != self.mean.size:
            raise ShapeError(f"batchnorm has {self.mean.size} channels, input has {in_shape[2]}")
        return tuple(in_shape)

    def _inv_std(self):
        return 1.0 / np.sqrt(self.var + self.epsilon)

    def forward(self, X):
        self.output_shape(X.shape[:3])
        s = self._inv_std()
        xn = (X - self.mean[None, None, :, None]) * s[None, None, :, None]
        return self.scale[None, None, :, None] * xn + self.offset[None, None, :, None]

    def reach(self, star, scheme=Scheme.EXACT, budget=None):
        return [reach_batchnorm(self, star)]

    def to_dict(self):
        return {
            "type": self.kind,
            "mean": self.mean.tolist(),
            "var": self.var.tolist(),
            "epsilon": self.epsilon,
            "scale": self.scale.tolist(),
            "offset": self.offset.tolist(),
        }


def reach_batchnorm(layer, star):
    # normalise, then scale and shift: two chained affine maps
    layer.output_shape(star.shape)
    s = layer._inv_std()
    normed = star.affine_scale(s, -layer.mean * s)
    return normed.affine_scale(layer.scale, layer.offset)
