"""Random feature operator learning."""

from .core import (
    CollocationGrid,
    ConditioningError,
    DataError,
    FeatureEnsemble,
    FieldSample,
    KernelSpec,
    OperatorDataset,
    OperatorModel,
    ParameterError,
    RandomFeatureInterpolant,
    RFConfig,
    RFOLError,
    min_separation,
    sampling_apply,
)
from .features import assemble, evaluate, sample_cauchy, sample_gaussian, sample_ensemble
from .operator import infer, predict_many, predict_samples, recover, train_operator
from .solver import gram_factorize, gram_spectrum_bounds, min_norm_fit, min_norm_fit_multi

__version__ = "0.1.0"
