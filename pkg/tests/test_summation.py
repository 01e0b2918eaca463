import math

import numpy as np
import pytest

from bose_limits.summation import log_sum_exp, stable_sum


def test_reorder_invariance_bit_exact():
    rng = np.random.default_rng(7)
    terms = rng.uniform(-1.0, 1.0, size=5000) * np.logspace(-12, 3, 5000)
    reference = stable_sum(terms)
    for seed in range(5):
        shuffled = np.random.default_rng(seed).permutation(terms)
        assert stable_sum(shuffled) == reference


def test_exactly_rounded_against_fsum():
    terms = [1e16, 1.0, -1e16, 1.0]
    assert stable_sum(terms) == 2.0


def test_empty_sum():
    assert stable_sum([]) == 0.0


def test_log_sum_exp_matches_direct():
    x = np.array([-1.0, 0.5, 2.0])
    direct = math.log(sum(math.exp(v) for v in x))
    assert log_sum_exp(x) == pytest.approx(direct, rel=1e-15)


def test_log_sum_exp_avoids_overflow():
    x = np.array([5000.0, 5000.0 + math.log(2.0)])
    assert log_sum_exp(x) == pytest.approx(5000.0 + math.log(3.0), rel=1e-15)
