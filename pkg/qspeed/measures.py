"""Checks on measures over binary strings and on finite distributions."""
from __future__ import annotations

from typing import Callable, Hashable, Mapping

import numpy as np

import qsim
from errors import ArgumentError
from machine import programs_of_length
from qsim import StateVector

Measure = Callable[[str], float]


def is_probability_measure(mu: Measure, depth: int, tol: float = 1e-9) -> bool:
    """mu(empty) = 1 and mu(x) = mu(x0) + mu(x1) for every x shorter than `depth`."""
    if depth < 0:
        raise ArgumentError(f"depth must be >= 0, got {depth}")
    if abs(mu("") - 1.0) > tol:
        return False
    for length in range(depth):
        for x in programs_of_length(length):
            if mu(x) < -tol or abs(mu(x) - mu(x + "0") - mu(x + "1")) > tol:
                return False
    return True


def expected_value(pmf: Mapping[Hashable, float], f: Callable[[Hashable], float] = lambda x: x) -> float:
    total = sum(pmf.values())
    if abs(total - 1.0) > 1e-9:
        raise ArgumentError(f"probabilities sum to {total}, not 1")
    return float(sum(f(x) * p for x, p in pmf.items()))


def marginal_measure(state: StateVector) -> Measure:
    """mu(x) = probability that the first l(x) measured qubits read x."""
    probs = np.abs(state.amplitudes) ** 2
    n = state.num_qubits

    def mu(prefix: str) -> float:
        if len(prefix) > n:
            return 0.0
        rest = n - len(prefix)
        start = qsim.bits_to_index(prefix) << rest
        return float(probs[start:start + (1 << rest)].sum())

    return mu
