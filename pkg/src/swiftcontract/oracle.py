"""Dense brute-force contraction used as the correctness reference."""

from math import prod

import numpy as np

from .errors import SizeError
from .tensor import ContractionSpec, CooTensor, from_dense, to_dense

DEFAULT_MAX_DENSE = 10**8


def oracle_contract(
    x: CooTensor, y: CooTensor, spec: ContractionSpec, max_dense: int = DEFAULT_MAX_DENSE
) -> CooTensor:
    """Contract by densifying both operands and summing over the paired modes.

    The dense operands and the dense output must each hold at most
    ``max_dense`` elements.
    """
    spec.check(x.shape, y.shape)
    out_shape = spec.output_shape(x.shape, y.shape)
    for name, shape in (("X", x.shape), ("Y", y.shape), ("output", out_shape)):
        size = prod(shape)
        if size > max_dense:
            raise SizeError(f"dense {name} would hold {size} elements (limit {max_dense})")
    if x.nnz == 0 or y.nnz == 0:
        return from_dense(np.zeros(out_shape))
    dense = np.tensordot(to_dense(x), to_dense(y), axes=(list(spec.cmodes_x), list(spec.cmodes_y)))
    return from_dense(dense)
