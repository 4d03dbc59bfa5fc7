"""Set-based reachability and robustness verification of CNNs with ImageStars."""

from ._kernels import BACKEND
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    EmptyInput,
    EmptySetError,
    ImageStarError,
    NoAttackedPixelsWarning,
    ParseError,
    ShapeError,
    WitnessMappingFailed,
)
from .image_star import ImageStar
from .layers import (
    AvgPoolLayer,
    BatchNormLayer,
    Conv2dLayer,
    FCLayer,
    MaxPoolLayer,
    ReLULayer,
    Scheme,
    eval_layer,
)
from .lp import LinearConstraints, LPOutcome, LPStatus, is_feasible, maximize, minimize
from .network import Network, ReachResult, evaluate, reach
from .robustness import (
    Counterexample,
    RobustnessResult,
    Verdict,
    brightening_set,
    extract_counterexamples,
    falsify,
    interpolation_set,
    verify_robustness,
    zonotope_brightening_set,
)
from .star import Predicate, Star

__version__ = "0.1.0"
