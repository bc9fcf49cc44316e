"""
Dicke Hamiltonian in the extended bosonic coherent basis.

After rotating the pseudospin by -π/2 around y and shifting A = a + G J_z,

    H = ω (A†A - G² J_z²) - ω0/2 (J+ + J-)

Basis states are D(α_m)|N> ⊗ |j, m> with α_m = -G m, so the diagonal is
ω (N - G² m²) and J± couples neighbouring m sectors through the overlap of
number states displaced by α_m - α_(m±1) = ±G. Everything stays in the
rotated frame; energies do not depend on it.
"""

import numpy as np

from ..errors import InvalidParameters
from ..model import BasisKind, BasisSpec, projections, raising_elements
from . import assemble
from .overlap import kernel_table


def build_coherent(params, cutoff, dense_threshold=None, displacement_sign=1):
    if displacement_sign not in (1, -1):
        raise InvalidParameters(
            "displacement_sign must be +1 or -1", displacement_sign=displacement_sign
        )
    basis = BasisSpec.for_params(BasisKind.COHERENT, params, cutoff)
    size = basis.spin_dimension
    shift = params.shift_constant

    boson, spin = np.divmod(np.arange(basis.dimension), size)
    m = projections(params.two_j)[spin]
    diagonal = params.omega * (boson - shift**2 * m**2)

    if params.omega0 == 0.0:
        empty = np.zeros(0, dtype=int)
        return assemble(
            basis, params, diagonal, empty, empty, np.zeros(0), dense_threshold
        )

    # T[N', N] = <N'|D(α_m - α_(m+1))|N>, shared by every sector pair
    table = kernel_table(displacement_sign * shift, cutoff)
    raising = raising_elements(params.two_j)[:-1]

    sector, n_prime, n = np.meshgrid(
        np.arange(size - 1), np.arange(cutoff + 1), np.arange(cutoff + 1), indexing="ij"
    )
    # (N, m) -> (N', m+1): -ω0/2 J+
    rows = (n_prime * size + sector + 1).ravel()
    cols = (n * size + sector).ravel()
    values = (-0.5 * params.omega0 * raising[:, None, None] * table[None, :, :]).ravel()
    return assemble(basis, params, diagonal, rows, cols, values, dense_threshold)
