"""Deterioration and damage identification from floor accelerations."""

from ._dip import (  # noqa: F401
    FormatError,
    InvalidArgument,
    NumericError,
    ShapeError,
    StageError,
    average_index,
    class_metrics,
    cropped_magnitude,
    default_config,
    fit_zca,
    generate,
    generate_dipd,
    lowpass,
    read_dipd,
    run_pipeline,
    standardize,
    stockwell,
)

__version__ = "0.1.0"
