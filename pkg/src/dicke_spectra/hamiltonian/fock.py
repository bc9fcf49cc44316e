"""
Dicke Hamiltonian in the Fock basis |n> ⊗ |j, m'>:

    H = ω a†a + ω0 J'z + γ/√N (a + a†)(J'+ + J'-)

The bosonic space is hard-truncated at n = cutoff: couplings leaving the box
are dropped.
"""

import numpy as np

from ..model import BasisKind, BasisSpec, projections, raising_elements
from . import assemble


def build_fock(params, cutoff, dense_threshold=None):
    basis = BasisSpec.for_params(BasisKind.FOCK, params, cutoff)
    size = basis.spin_dimension

    boson, spin = np.divmod(np.arange(basis.dimension), size)
    m = projections(params.two_j)[spin]
    diagonal = params.omega * boson + params.omega0 * m

    coupling = params.gamma / np.sqrt(params.n_atoms)
    raising = raising_elements(params.two_j)
    n, k = np.meshgrid(np.arange(cutoff), np.arange(size), indexing="ij")
    n, k = n.ravel(), k.ravel()
    root = np.sqrt(n + 1.0)
    lower = n * size + k

    # (n, m) -> (n+1, m+1): a† J+
    up = k < size - 1
    # (n, m) -> (n+1, m-1): a† J-, with <m-1|J-|m> = <m|J+|m-1>
    down = k > 0

    rows = np.concatenate([lower[up] + size + 1, lower[down] + size - 1])
    cols = np.concatenate([lower[up], lower[down]])
    values = np.concatenate(
        [
            coupling * (root[up] * raising[k[up]]),
            coupling * (root[down] * raising[k[down] - 1]),
        ]
    )
    return assemble(basis, params, diagonal, rows, cols, values, dense_threshold)
