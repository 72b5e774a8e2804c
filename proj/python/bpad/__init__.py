"""Hybrid artifact detection for minute-resolution blood pressure signals.

The heavy lifting lives in the compiled extension ``bpad._core``; this
package re-exports its public surface. Sample values travel as
``list[float | None]`` (``None`` marks a missing sample or an undefined
delta) and per-sample labels as ints: 0 valid, 1 artifact, 2 unknown.
"""

from bpad._core import (
    NumericError,
    ParseError,
    Rng,
    arima_delta,
    calibrate_threshold,
    confusion,
    default_config,
    delta_trace,
    detect,
    fit_slope,
    flatline_labels,
    generate_dataset,
    model_info,
    or_merge,
    percentile,
    scale,
    scale_stats,
    sensitivity,
    specificity,
    spike_labels,
    split_ids,
    train,
)

VALID, ARTIFACT, UNKNOWN = 0, 1, 2

__all__ = [
    "ARTIFACT",
    "NumericError",
    "ParseError",
    "Rng",
    "UNKNOWN",
    "VALID",
    "arima_delta",
    "calibrate_threshold",
    "confusion",
    "default_config",
    "delta_trace",
    "detect",
    "fit_slope",
    "flatline_labels",
    "generate_dataset",
    "model_info",
    "or_merge",
    "percentile",
    "scale",
    "scale_stats",
    "sensitivity",
    "specificity",
    "spike_labels",
    "split_ids",
    "train",
]
