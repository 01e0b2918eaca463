"""Deterministic reductions for mode sums and partition sums.

Every reported total in this package goes through `stable_sum`, which
canonicalizes the summation order (descending magnitude) and then uses
`math.fsum`, whose result is the exactly rounded sum of its inputs.  Totals
are therefore bit-identical across runs and platforms and independent of
how the terms were produced.
"""

import math

import numpy as np

__all__ = ["stable_sum", "log_sum_exp"]


def stable_sum(terms) -> float:
    """Exactly rounded sum of `terms`, evaluated in descending |term| order."""
    arr = np.asarray(terms, dtype=float).ravel()
    if arr.size == 0:
        return 0.0
    order = np.argsort(np.abs(arr), kind="stable")[::-1]
    return math.fsum(arr[order])


def log_sum_exp(exponents) -> float:
    """log(sum(exp(x))) without overflow; the inner sum uses `stable_sum`."""
    arr = np.asarray(exponents, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("log_sum_exp of an empty sequence")
    m = float(arr.max())
    if math.isinf(m):
        return m
    return m + math.log(stable_sum(np.exp(arr - m)))
