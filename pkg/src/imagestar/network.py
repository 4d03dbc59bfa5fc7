"""Network description, concrete inference and the layer-by-layer reach driver."""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .errors import BudgetExceeded, EmptyInput, ShapeError
from .image_star import ImageStar
from .layers.base import Scheme, as_batch

DEFAULT_BUDGET = 10_000


@dataclass
class ReachStats:
    stars_per_layer: list = field(default_factory=list)
    lp_calls: int = 0
    elapsed: float = 0.0


@dataclass
class ReachResult:
    output_sets: list
    stats: ReachStats
    scheme: Scheme = Scheme.EXACT


class Network:
    """An ordered list of layers applied to ``(h, w, nc)`` images.

    Shapes are checked once here; ``shapes[i]`` is the input shape of layer
    ``i`` and ``shapes[-1]`` the output shape.
    """

    def __init__(self, layers, input_shape, labels=None):
        self.layers = list(layers)
        self.input_shape = tuple(int(v) for v in input_shape)
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ShapeError(f"input shape must be (h, w, nc) with positive entries, got {input_shape}")
        shapes = [self.input_shape]
        for i, layer in enumerate(self.layers):
            try:
                shapes.append(tuple(layer.output_shape(shapes[-1])))
            except ShapeError as exc:
                raise ShapeError(f"layer {i} ({layer.kind}): {exc}") from None
        self.shapes = shapes
        n_out = int(np.prod(self.output_shape))
        if labels is None:
            labels = [str(i) for i in range(n_out)]
        labels = [str(v) for v in labels]
        if len(labels) != n_out:
            raise ShapeError(f"{len(labels)} labels given for {n_out} outputs")
        self.labels = labels

    def __repr__(self):
        kinds = ", ".join(layer.kind for layer in self.layers)
        return f"Network({self.input_shape} -> {self.output_shape}: {kinds})"

    @property
    def output_shape(self):
        return self.shapes[-1]

    @property
    def n_outputs(self):
        return int(np.prod(self.output_shape))

    def forward(self, X):
        """Concrete batch ``(h, w, nc, B)`` through every layer."""
        for layer in self.layers:
            X = layer.forward(np.ascontiguousarray(X))
        return X

    def evaluate(self, x):
        """Logits of one image (flat vector) or of a stack ``(B, h, w, nc)`` -> ``(B, n)``."""
        X, single = as_batch(x)
        if X.shape[:3] != self.input_shape:
            raise ShapeError(f"input of shape {X.shape[:3]}, network expects {self.input_shape}")
        out = self.forward(X).reshape(-1, X.shape[3]).T
        return out[0] if single else out

    def reach(self, input_set, scheme=Scheme.EXACT, budget=DEFAULT_BUDGET, workers=1):
        return reach(self, input_set, scheme, budget=budget, workers=workers)


def evaluate(net, x):
    return net.evaluate(x)


def reach(net, input_set, scheme=Scheme.EXACT, budget=DEFAULT_BUDGET, workers=1):
    """Push ``input_set`` through ``net`` one layer at a time.

    Under the exact scheme each layer maps every running star independently
    (optionally on ``workers`` threads) and the results are concatenated in
    input order.  ``budget`` caps the number of running stars.
    """
    scheme = Scheme.parse(scheme)
    if tuple(input_set.shape) != net.input_shape:
        raise ShapeError(f"input set of shape {input_set.shape}, network expects {net.input_shape}")
    if input_set.is_empty():
        raise EmptyInput("the input set is empty")
    t0 = time.perf_counter()
    calls0 = lp.lp_call_count()
    stats = ReachStats()
    running = [input_set]
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for i, layer in enumerate(net.layers):

            def step(s, layer=layer):
                return layer.reach(s, scheme, budget=budget)

            parts = pool.map(step, running) if pool else map(step, running)
            try:
                running = [s for part in parts for s in part]
            except BudgetExceeded as exc:
                raise BudgetExceeded(exc.count, budget, i) from None
            if budget is not None and len(running) > budget:
                raise BudgetExceeded(len(running), budget, i)
            stats.stars_per_layer.append(len(running))
    finally:
        if pool:
            pool.shutdown()
    stats.lp_calls = lp.lp_call_count() - calls0
    stats.elapsed = time.perf_counter() - t0
    return ReachResult(running, stats, scheme)


__all__ = ["DEFAULT_BUDGET", "ImageStar", "Network", "ReachResult", "ReachStats", "Scheme", "evaluate", "reach"]
