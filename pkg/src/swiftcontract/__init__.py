"""Sparse tensor contraction by grouping and bounded probing accumulation."""

from .baseline import contract_baseline
from .errors import BoundsError, CapacityError, ParseError, RangeError, SizeError
from .grouping import GroupedTensor, assign_metrics, counting_sort, group_tensor, run_lookup
from .oracle import oracle_contract
from .swift import ProbeAccumulator, StageReport, contract_swift, slots_for
from .tensor import (
    ContractionSpec,
    CooTensor,
    build_coo,
    delinearize,
    first_difference,
    from_dense,
    from_entries,
    linearize,
    to_dense,
)
from .tns import PRESETS, generate, get_preset, parse_tns, random_tensor, read_tns, save_tns, write_tns

__all__ = [
    "BoundsError", "CapacityError", "ContractionSpec", "CooTensor", "GroupedTensor",
    "PRESETS", "ParseError", "ProbeAccumulator", "RangeError", "SizeError", "StageReport",
    "assign_metrics", "build_coo", "contract_baseline", "contract_swift", "counting_sort",
    "delinearize", "first_difference", "from_dense", "from_entries", "generate", "get_preset",
    "group_tensor", "linearize", "oracle_contract", "parse_tns", "random_tensor", "read_tns",
    "run_lookup", "save_tns", "slots_for", "to_dense", "write_tns",
]
