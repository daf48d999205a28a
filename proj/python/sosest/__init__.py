"""Mean and local speed-of-sound estimation from diverging-wave echo delays."""

from ._core import (
    DELTA_CONVENTION,
    ArgumentError,
    CalibrationModel,
    ChannelSet,
    Config,
    ConfigError,
    MissingInputError,
    NumericalError,
    OutOfRangeError,
    build_calibration,
    calibration_sweep,
    corrected_sos,
    echo_shift_model,
    estimate_sos,
    evaluate_calibration,
    fit_pattern,
    ground_truth,
    ncc_delay_1d,
    reconstruct,
    simulate,
)

__all__ = [
    "DELTA_CONVENTION",
    "ArgumentError",
    "CalibrationModel",
    "ChannelSet",
    "Config",
    "ConfigError",
    "MissingInputError",
    "NumericalError",
    "OutOfRangeError",
    "build_calibration",
    "calibration_sweep",
    "corrected_sos",
    "echo_shift_model",
    "estimate_sos",
    "evaluate_calibration",
    "fit_pattern",
    "ground_truth",
    "ncc_delay_1d",
    "reconstruct",
    "simulate",
]
