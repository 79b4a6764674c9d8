"""Target tracking with a learned shift-invariant motion model.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface: scenario presets and simulators, GP motion-model
training and prediction, the bootstrap particle filter, belief-propagation
data association, and the RMSE/GOSPA metrics.
"""

from ._core import (
    ConfigError,
    DataError,
    GpModel,
    Hyperparameters,
    Maneuver,
    NsimModel,
    NumericalError,
    ScenarioSpec,
    __version__,
    exact_association_marginals,
    generate_measurements,
    generate_trajectory,
    gospa,
    gp_fit,
    gp_predict,
    load_model,
    predict_delta,
    rmse,
    run_bp,
    s1_test,
    s1_train,
    s2_test,
    s2_train,
    s3_test,
    save_model,
    track_stt,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "GpModel",
    "Hyperparameters",
    "Maneuver",
    "NsimModel",
    "NumericalError",
    "ScenarioSpec",
    "__version__",
    "exact_association_marginals",
    "generate_measurements",
    "generate_trajectory",
    "gospa",
    "gp_fit",
    "gp_predict",
    "load_model",
    "predict_delta",
    "rmse",
    "run_bp",
    "s1_test",
    "s1_train",
    "s2_test",
    "s2_train",
    "s3_test",
    "save_model",
    "track_stt",
    "train",
]
