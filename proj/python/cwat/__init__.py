"""Python bindings for the cwat EEG toolkit."""

import json

from . import _cwat
from ._cwat import (
    CwatError,
    Model,
    band_power,
    confusion,
    count_cost_conv,
    downsample,
    lr_schedule,
    parse_edf,
    per_case_vote,
    rates,
    synth_edf_bytes,
    synth_segments,
    znorm,
)


def cost_report(preset="paper-defaults"):
    """Cost report of a named model preset as a dict."""
    return json.loads(_cwat.cost_report_json(preset))


__all__ = [
    "CwatError",
    "Model",
    "band_power",
    "confusion",
    "cost_report",
    "count_cost_conv",
    "downsample",
    "lr_schedule",
    "parse_edf",
    "per_case_vote",
    "rates",
    "synth_edf_bytes",
    "synth_segments",
    "znorm",
]
