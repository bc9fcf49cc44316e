"""
Overlaps between displaced number states, <N'|D(β)|N> with
D(β) = exp(β a† - β a) for real β.

For N' >= N:

    <N'|D(β)|N> = sqrt(N!/N'!) β^(N'-N) exp(-β²/2) L_N^(N'-N)(β²)

and <N'|D(β)|N> = (-1)^(N'-N) <N|D(β)|N'> covers the other triangle.
"""

import functools
import logging

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln

from ..errors import InvalidParameters, KernelPrecisionError

logger = logging.getLogger(__name__)

# Row and column norms of a truncated unitary never exceed one.
NORM_SLACK = 1e-10


def _magnitudes(n_prime, n, beta):
    lo = np.minimum(n_prime, n)
    hi = np.maximum(n_prime, n)
    gap = hi - lo
    x = beta * beta
    laguerre = eval_genlaguerre(lo, gap, x)
    log_scale = (
        0.5 * (gammaln(lo + 1.0) - gammaln(hi + 1.0))
        + gap * np.log(abs(beta))
        - 0.5 * x
    )
    sign = np.where((n_prime < n) & (gap % 2 == 1), -1.0, 1.0)
    if beta < 0:
        sign = sign * np.where(gap % 2 == 1, -1.0, 1.0)
    return sign * np.exp(log_scale) * laguerre


def displaced_overlap(n_prime, n, beta):
    """<n_prime|D(beta)|n> for integer n, n_prime >= 0 and real beta."""
    if n_prime < 0 or n < 0:
        raise InvalidParameters("number states are non-negative", n_prime=n_prime, n=n)
    beta = float(beta)
    if beta == 0.0:
        return 1.0 if n_prime == n else 0.0
    return float(_magnitudes(np.array(n_prime), np.array(n), beta))


def _check_table(table, shift, cutoff):
    if not np.all(np.isfinite(table)):
        worst = np.unravel_index(np.argmax(~np.isfinite(table)), table.shape)
        raise KernelPrecisionError(
            shift, cutoff, "has non-finite entries", (worst, np.nan)
        )
    norms = np.maximum(
        np.einsum("ij,ij->i", table, table), np.einsum("ij,ij->j", table, table)
    )
    excess = norms - 1.0
    if excess.max() > NORM_SLACK:
        row = int(np.argmax(excess))
        raise KernelPrecisionError(
            shift, cutoff, "is not a truncated unitary", (row, float(excess[row]))
        )


@functools.lru_cache(maxsize=64)
def kernel_table(shift, cutoff):
    """
    Read-only table T with T[N', N] = <N'|D(shift)|N> for 0 <= N, N' <= cutoff.

    Cached per (shift, cutoff): every pair of neighbouring spin sectors in
    the coherent basis uses the same table.
    """
    if cutoff < 0:
        raise InvalidParameters("cutoff must be >= 0", cutoff=cutoff)
    size = cutoff + 1
    if shift == 0.0:
        table = np.eye(size)
    else:
        n_prime, n = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
        table = _magnitudes(n_prime, n, float(shift))
        _check_table(table, shift, cutoff)
    logger.debug(f"built displaced-overlap table for G={shift!r}, cutoff={cutoff}")
    table.setflags(write=False)
    return table


def displacement_oracle(beta, cutoff, padding=80):
    """
    Brute-force <N'|D(beta)|N> for N, N' <= cutoff: exponentiate
    beta (a† - a) in a Fock space `padding` levels larger than needed and
    read off the leading block.
    """
    size = cutoff + 1 + padding
    annihilation = np.diag(np.sqrt(np.arange(1.0, size)), k=1)
    generator = beta * (annihilation.T - annihilation)
    return expm(generator)[: cutoff + 1, : cutoff + 1]


def verify_kernel(shift, cutoff, tolerance=1e-10):
    """Compare `kernel_table` with the oracle; return the largest deviation."""
    deviation = np.abs(kernel_table(shift, cutoff) - displacement_oracle(shift, cutoff))
    worst = np.unravel_index(np.argmax(deviation), deviation.shape)
    largest = float(deviation[worst])
    if largest > tolerance:
        raise KernelPrecisionError(
            shift,
            cutoff,
            f"disagrees with the brute-force oracle beyond {tolerance:g}",
            (tuple(int(i) for i in worst), largest),
        )
    return largest


def unitarity_defect(table):
    """1 - |row|² for every row of a truncated displacement table."""
    return 1.0 - np.einsum("ij,ij->i", table, table)
