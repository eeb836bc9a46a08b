"""Dilution refrigerator capacity maps and payload heat-load budgets."""

import os as _os

_data = _os.path.join(_os.path.dirname(__file__), "data")
if _os.path.isdir(_data):
    _os.environ.setdefault("CRYOMAP_DATA_DIR", _data)

from ._cryomap import (  # noqa: E402
    STAGES,
    CapacityMap,
    CryomapError,
    Dataset,
    aggregate_loads,
    conduction_load,
    conductivity,
    data_dir,
    simulate,
    synth_state,
)

__all__ = [
    "STAGES",
    "CapacityMap",
    "CryomapError",
    "Dataset",
    "aggregate_loads",
    "conduction_load",
    "conductivity",
    "data_dir",
    "simulate",
    "synth_state",
]
