"""Integer mixing shared by every hash table in the package.

Both engines hash with the same function so that timing differences come
from table layout rather than hash quality.
"""

import numpy as np
from numba import njit

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


@njit(cache=True, inline="always")
def mix64(key):
    """SplitMix64 finalizer: a bijective, well-distributed 64-bit mixer."""
    z = np.uint64(key)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p
