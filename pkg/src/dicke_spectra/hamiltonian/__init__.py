import logging

import attr
import numpy as np
from scipy import sparse

from .. import DENSE_STORAGE_THRESHOLD
from ..errors import DimensionOverflow
from ..model import BasisKind, BasisSpec, ModelParams

logger = logging.getLogger(__name__)

# scipy.sparse keeps 32-bit indices while they suffice; beyond that the
# assembly would silently switch index types, so refuse instead.
INDEX_LIMIT = int(np.iinfo(np.int32).max)


@attr.s(frozen=True, eq=False)
class HamiltonianMatrix:
    """
    A real symmetric Hamiltonian on a truncated product basis.

    `storage` is either a dense `numpy.ndarray` or a `scipy.sparse.csr_matrix`;
    callers go through `element`, `toarray` and `nnz` and never need to know
    which one they got.
    """

    basis = attr.ib(type=BasisSpec)
    params = attr.ib(type=ModelParams)
    storage = attr.ib()

    @property
    def dimension(self):
        return self.basis.dimension

    @property
    def is_sparse(self):
        return sparse.issparse(self.storage)

    @property
    def nnz(self):
        if self.is_sparse:
            return int(self.storage.nnz)
        return int(np.count_nonzero(self.storage))

    def element(self, row, col):
        return float(self.storage[row, col])

    def __getitem__(self, key):
        return self.element(*key)

    def toarray(self):
        if self.is_sparse:
            return self.storage.toarray()
        return np.array(self.storage, copy=True)

    def is_symmetric(self):
        if self.is_sparse:
            return (self.storage != self.storage.T).nnz == 0
        return bool(np.array_equal(self.storage, self.storage.T))


def check_dimension(dimension, offdiagonal_count):
    nnz_estimate = dimension + 2 * offdiagonal_count
    if dimension > INDEX_LIMIT or nnz_estimate > INDEX_LIMIT:
        raise DimensionOverflow(dimension, nnz_estimate, INDEX_LIMIT)


def assemble(basis, params, diagonal, rows, cols, values, dense_threshold=None):
    """
    Build a `HamiltonianMatrix` from its diagonal and one triplet per
    unordered off-diagonal pair. Every triplet is written at (row, col) and at
    (col, row) with the very same float, so the result is symmetric
    bit-for-bit.
    """
    if dense_threshold is None:
        dense_threshold = DENSE_STORAGE_THRESHOLD
    dimension = basis.dimension
    check_dimension(dimension, len(values))

    if dimension <= dense_threshold:
        storage = np.zeros((dimension, dimension))
        storage[np.arange(dimension), np.arange(dimension)] = diagonal
        storage[rows, cols] = values
        storage[cols, rows] = values
    else:
        index = np.arange(dimension)
        storage = sparse.coo_matrix(
            (
                np.concatenate([diagonal, values, values]),
                (
                    np.concatenate([index, rows, cols]),
                    np.concatenate([index, cols, rows]),
                ),
            ),
            shape=(dimension, dimension),
        ).tocsr()
        storage.eliminate_zeros()

    logger.debug(
        f"assembled {basis.kind.value} Hamiltonian, cutoff={basis.cutoff}, "
        f"dimension={dimension}, {'sparse' if sparse.issparse(storage) else 'dense'}"
    )
    return HamiltonianMatrix(basis=basis, params=params, storage=storage)


def build(params, kind, cutoff, **kwargs):
    """Build the Hamiltonian of `params` in the basis `kind` truncated at `cutoff`."""
    from .coherent import build_coherent
    from .fock import build_fock

    kind = BasisKind.parse(kind)
    builder = build_fock if kind is BasisKind.FOCK else build_coherent
    return builder(params, cutoff, **kwargs)
