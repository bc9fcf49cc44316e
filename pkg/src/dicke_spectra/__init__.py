"""
.. include:: ../../README.md
"""


VERSION = "1.0.0"

# Default convergence tolerance, in energy units.
DEFAULT_EPSILON = 1e-6

# Above this dimension Hamiltonians are stored as sparse matrices.
DENSE_STORAGE_THRESHOLD = 4096

# Above this dimension the eigensolver switches to the iterative path.
DENSE_SOLVER_THRESHOLD = 2000
