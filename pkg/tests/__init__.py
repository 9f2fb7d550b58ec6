"""Tests for the parrondo package."""

import os
from math import floor, log10

SLOW = os.environ.get("PARRONDO_SLOW_TESTS") == "1"
SLOW_REASON = "set PARRONDO_SLOW_TESTS=1 to run long reproductions"


def six_digit_tolerance(value: float) -> float:
    """Half a unit in the sixth significant digit of *value*."""
    return 0.5 * 10 ** (floor(log10(abs(value))) - 5) * 1.0001
