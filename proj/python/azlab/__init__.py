"""Attention-zone masking experiments for span-extraction reading comprehension.

Thin Python access to the C++ core: evaluation, results tables, zone masks,
heatmap rendering, training and decoding.
"""

from ._core import (
    Zone,
    average_runs,
    collect_results,
    decode,
    evaluate,
    exact_match,
    f1_score,
    normalize_answer,
    prediction_filename,
    read_results,
    render_heatmap,
    results_to_csv,
    stddev_of_difference,
    sweep,
    train,
    zone_mask,
)

__all__ = [
    "Zone",
    "average_runs",
    "collect_results",
    "decode",
    "evaluate",
    "exact_match",
    "f1_score",
    "normalize_answer",
    "prediction_filename",
    "read_results",
    "render_heatmap",
    "results_to_csv",
    "stddev_of_difference",
    "sweep",
    "train",
    "zone_mask",
]
