from .lm import LMOptions, FitResult, Parameter, levenberg_marquardt
from .models import (
    MODELS, DataSeries, FitContext, fit_series, jacobian, predict, register,
    residual_vector, synthesize_dataset)
from .bundles import (
    fit_odmr, fit_zpl_and_visibility, odmr_parameters, reference_odmr_bundle,
    reference_visibility_bundle, reference_zpl_bundle, visibility_parameters,
    zpl_parameters)
