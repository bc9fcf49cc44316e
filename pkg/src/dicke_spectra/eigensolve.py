import logging

import attr
import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from . import DENSE_SOLVER_THRESHOLD
from .errors import EigensolverError, InvalidParameters

logger = logging.getLogger(__name__)

# Start vectors of the iterative path are drawn from this seed, so two solves
# of the same matrix are identical.
START_VECTOR_SEED = 20130101

# Extra Ritz pairs requested from ARPACK and then discarded. They keep the
# lowest, nearly degenerate parity doublet of the superradiant phase from
# stalling the iteration.
EXTRA_PAIRS = 4

RESIDUAL_TOLERANCE = 1e-9


@attr.s(frozen=True, eq=False)
class SpectrumResult:
    """Lowest eigenvalues of a Hamiltonian, ascending."""

    eigenvalues = attr.ib()
    k_requested = attr.ib(type=int)
    residual_norms = attr.ib()
    eigenvectors = attr.ib(default=None)
    method = attr.ib(default="dense")
    dimension = attr.ib(default=0)

    @property
    def ground_energy(self):
        return float(self.eigenvalues[0])

    def __len__(self):
        return len(self.eigenvalues)

    def __getitem__(self, level):
        return float(self.eigenvalues[level])


def _as_operator(matrix):
    """Accept a HamiltonianMatrix, a dense array or a sparse matrix."""
    storage = getattr(matrix, "storage", matrix)
    if sparse.issparse(storage):
        return storage.tocsr()
    return np.asarray(storage, dtype=float)


def _dense(operator, k):
    dense = operator.toarray() if sparse.issparse(operator) else operator
    values, vectors = linalg.eigh(dense, subset_by_index=[0, k - 1], driver="evr")
    return values, vectors


def _iterative(operator, k, maxiter):
    dimension = operator.shape[0]
    wanted = k + EXTRA_PAIRS
    ncv = min(dimension, max(2 * wanted + 1, 20))
    start = np.random.default_rng(START_VECTOR_SEED).standard_normal(dimension)
    try:
        values, vectors = eigsh(
            operator,
            k=wanted,
            which="SA",
            v0=start,
            ncv=ncv,
            maxiter=maxiter,
            tol=0,
        )
    except ArpackNoConvergence as exc:
        raise EigensolverError(
            "ARPACK did not converge",
            dimension=dimension,
            k=k,
            requested=wanted,
            ncv=ncv,
            maxiter=maxiter,
            converged=len(exc.eigenvalues),
        ) from exc
    order = np.argsort(values, kind="stable")[:k]
    return values[order], vectors[:, order]


def _residuals(operator, values, vectors):
    return np.linalg.norm(operator @ vectors - vectors * values, axis=0)


def lowest_eigenvalues(
    matrix,
    k=1,
    eigenvectors=False,
    method="auto",
    dense_threshold=None,
    maxiter=None,
):
    """
    The `k` lowest eigenvalues of a real symmetric matrix.

    `method` is "dense" (full LAPACK solve restricted to the lowest `k`),
    "iterative" (ARPACK Lanczos) or "auto", which picks dense up to
    `dense_threshold` and iterative above. The iterative path falls back to
    dense when the matrix is too small for ARPACK to return `k` + 4 pairs.
    """
    operator = _as_operator(matrix)
    dimension = operator.shape[0]
    if not 1 <= k <= dimension:
        raise InvalidParameters("k must lie in 1..dimension", k=k, dimension=dimension)
    if method not in ("auto", "dense", "iterative"):
        raise InvalidParameters("unknown eigensolver method", method=method)
    if dense_threshold is None:
        dense_threshold = DENSE_SOLVER_THRESHOLD
    if maxiter is None:
        maxiter = max(1000, 10 * dimension)

    if method == "auto":
        method = "dense" if dimension <= dense_threshold else "iterative"
    if method == "iterative" and k + EXTRA_PAIRS >= dimension:
        logger.debug(f"dimension {dimension} too small for ARPACK, solving densely")
        method = "dense"

    if method == "dense":
        values, vectors = _dense(operator, k)
    else:
        values, vectors = _iterative(operator, k, maxiter)

    residuals = _residuals(operator, values, vectors)
    bound = RESIDUAL_TOLERANCE * np.maximum(1.0, np.abs(values))
    if np.any(residuals >= bound):
        worst = int(np.argmax(residuals / bound))
        raise EigensolverError(
            "residual contract violated",
            dimension=dimension,
            k=k,
            method=method,
            level=worst,
            residual=f"{residuals[worst]:.3e}",
        )
    logger.debug(
        f"{method} solve, dimension={dimension}, k={k}, lowest={values[0]!r}"
    )
    return SpectrumResult(
        eigenvalues=values,
        k_requested=k,
        residual_norms=residuals,
        eigenvectors=vectors if eigenvectors else None,
        method=method,
        dimension=dimension,
    )


def ground_energy(matrix, **kwargs):
    return lowest_eigenvalues(matrix, k=1, **kwargs).ground_energy
