"""Reference values for the two-dimensional example ``H = [[0, 1], [-1, -2]]``.

Tests and the ``reproduce-table1`` command both read from here.
"""
import math

import numpy as np

EXAMPLE_H = np.array([[0.0, 1.0], [-1.0, -2.0]])

# columns e1, e2, -e1, -e2
SIMPLE_B = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])

NON_REDUNDANT_B = np.array(
    [[1.0, 0.0, 1 / math.sqrt(2), 1 / math.sqrt(2)], [0.0, 1.0, 1 / math.sqrt(2), -1 / math.sqrt(2)]]
)

# (theta_lo, theta_hi, direction, multiplicity, measure) in counterclockwise order
TABLE1 = (
    (-0.321755, 0.27167, (0, -1), 6, 0.094),
    (0.27167, math.pi / 6, (0, -2), 3, 0.04),
    (math.pi / 6, 1.94263, (1, -2), 2, 0.226),
    (1.94263, 2.45243, (1, -1), 4, 0.08),
    (2.45243, 2.81984, (1, 0), 6, 0.06),
    (2.81984, 3.41326, (0, 1), 6, 0.094),
    (3.41326, 7 * math.pi / 6, (0, 2), 3, 0.04),
    (7 * math.pi / 6, 5.08422, (-1, 2), 2, 0.226),
    (5.08422, 5.59402, (-1, 1), 4, 0.08),
    (5.59402, 5.96143, (-1, 0), 6, 0.06),
)

ALPHABET_ENTROPY = 3.052
ACTIVATION_ENTROPY = 4.746
ENTROPY_TOL = 0.005

BOUNDARY_TOL = 1e-3
MEASURE_TOL = 1e-3

CENSUS = {"directions": 10, "used": 42, "unused": 30, "zero": 9}

# Tie example: the point (0, 1) is served by direction (1, -2) through two patterns
FIG2_POINT = (0.0, 1.0)
FIG2_DIRECTION = (1, -2)
FIG2_PATTERNS = ((0, -1, -1, 1), (1, -1, 0, 1))


def breakpoints():
    """The ten cell boundaries, wrapped into ``[0, 2 pi)`` and sorted."""
    return sorted(row[1] % (2 * math.pi) for row in TABLE1)
