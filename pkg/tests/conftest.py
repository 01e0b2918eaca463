"""Shared test oracles, independent of the library's computation paths."""

import itertools
import math

import numpy as np
import pytest


def brute_force_mode_vectors(d, l, p_max):
    """Enumerate dual-lattice vectors with |p| <= p_max by nested loops."""
    step = 2.0 * math.pi / l
    r = int(math.floor(p_max / step + 1e-9))
    out = []
    for n in itertools.product(range(-r, r + 1), repeat=d):
        p = tuple(step * k for k in n)
        if sum(x * x for x in p) <= p_max * p_max * (1.0 + 1e-14):
            out.append(p)
    return out


def brute_force_primed_pressure(beta, mu, d, l, p_max):
    """Direct fsum of the p != 0 pressure terms, no tail machinery."""
    v = l ** d
    terms = []
    for p in brute_force_mode_vectors(d, l, p_max):
        lam = 0.5 * sum(x * x for x in p)
        if lam == 0.0:
            continue
        terms.append(-math.log1p(-math.exp(beta * (mu - lam))) / (beta * v))
    return math.fsum(terms)


def brute_force_density(beta, mu, d, l, p_max):
    v = l ** d
    terms = []
    for p in brute_force_mode_vectors(d, l, p_max):
        lam = 0.5 * sum(x * x for x in p)
        if lam == 0.0:
            continue
        terms.append(1.0 / math.expm1(beta * (lam - mu)))
    return math.fsum(terms) / v


@pytest.fixture(scope="session")
def lattice_d3_l16():
    from bose_limits.lattice_ideal import build_lattice

    return build_lattice(3, 16.0, 10.0)
