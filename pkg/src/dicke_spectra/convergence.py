"""
Truncation convergence of the Dicke spectrum.

An energy level is converged at cutoff c when

    ΔE(c) = |E(c + 1) - E(c)| < ε

and the minimal cutoff is the first c for which this holds. The same
criterion applies to any level, identified by its index in the sorted
spectrum.

In the coherent basis ΔE alternates between small and large values on
consecutive cutoffs, so one small ΔE can stop a scan while the energy is
still off by more than ε. A `window` of w asks for w consecutive cutoffs
c, ..., c + w - 1 with ΔE < ε; w = 1 is the plain criterion.
"""

import logging
import math

import attr
import numpy as np
from scipy import stats

from .eigensolve import lowest_eigenvalues
from .errors import InvalidParameters, NothingToFit
from .hamiltonian import build
from .model import BasisKind, is_superradiant

logger = logging.getLogger(__name__)

SCAN_POLICIES = ("linear", "bisect")

PRECISION_INDEXING = ("lower", "upper")

# Cutoff limit used when no analytic scale is available (normal phase).
DEFAULT_CUTOFF_LIMIT = 200

# ΔE values below this are solver noise and are not fitted.
NUMERICAL_FLOOR = 1e-14


@attr.s(frozen=True)
class ConvergenceReport:
    basis_kind = attr.ib(type=BasisKind)
    minimal_cutoff = attr.ib()
    energy_at_min = attr.ib(type=float)
    delta_e_trajectory = attr.ib(converter=tuple)
    level_index = attr.ib(type=int, default=0)
    converged = attr.ib(type=bool, default=True)
    cutoff_limit = attr.ib(default=None)
    scan_policy = attr.ib(default="linear")
    window = attr.ib(default=1)

    @property
    def delta_e(self):
        """ΔE at the reported cutoff, or at the last one tried."""
        cutoff = self.minimal_cutoff if self.converged else self.last_cutoff
        return dict(self.delta_e_trajectory).get(cutoff)

    @property
    def last_cutoff(self):
        return self.delta_e_trajectory[-1][0] if self.delta_e_trajectory else None


@attr.s(frozen=True)
class PrecisionFit:
    """Least-squares line -log10 ΔE = intercept + slope * cutoff."""

    slope = attr.ib(type=float)
    intercept = attr.ib(type=float)
    r_squared = attr.ib(type=float)
    samples = attr.ib(converter=tuple)
    trajectory = attr.ib(converter=tuple, default=())
    index_by = attr.ib(default="lower")

    @property
    def prefactor(self):
        """A in ΔE ≈ A 10^(-slope * cutoff)."""
        return 10.0 ** (-self.intercept)

    def predicted_delta_e(self, cutoff):
        return self.prefactor * 10.0 ** (-self.slope * cutoff)


class LevelEnergies:
    """
    Energy of one sorted level as a function of the cutoff, computed once per
    cutoff and remembered.
    """

    def __init__(self, params, basis_kind, level=0, **solver_options):
        if level < 0:
            raise InvalidParameters("level must be >= 0", level=level)
        self.params = params
        self.basis_kind = BasisKind.parse(basis_kind)
        self.level = level
        self.solver_options = solver_options
        self._energies = {}

    @property
    def first_cutoff(self):
        """Smallest cutoff whose basis holds `level + 1` states."""
        return max(0, math.ceil((self.level + 1) / self.params.spin_dimension) - 1)

    def __call__(self, cutoff):
        if cutoff not in self._energies:
            if cutoff < self.first_cutoff:
                raise InvalidParameters(
                    "level does not exist at this cutoff",
                    level=self.level,
                    cutoff=cutoff,
                )
            matrix = build(self.params, self.basis_kind, cutoff)
            spectrum = lowest_eigenvalues(
                matrix, k=self.level + 1, **self.solver_options
            )
            self._energies[cutoff] = spectrum[self.level]
            logger.debug(
                f"{self.basis_kind.value} cutoff={cutoff} "
                f"E[{self.level}]={self._energies[cutoff]!r}"
            )
        return self._energies[cutoff]

    def delta_e(self, cutoff):
        return abs(self(cutoff + 1) - self(cutoff))


def delta_e(params, basis_kind, cutoff, level=0, **solver_options):
    """|E_level(cutoff + 1) - E_level(cutoff)|."""
    if cutoff < 0:
        raise InvalidParameters("cutoff must be >= 0", cutoff=cutoff)
    return LevelEnergies(params, basis_kind, level, **solver_options).delta_e(cutoff)


def analytic_nmax_bound(params):
    """
    Estimate of the Fock truncation needed for the ground state in the
    superradiant phase: the mean photon number of the projected SU(2)
    coherent-state variational solution plus five times its spread.
    """
    if params.gamma == 0.0 or params.gamma < params.gamma_c:
        raise InvalidParameters(
            "the truncation estimate only holds in the superradiant phase",
            gamma=params.gamma,
            gamma_c=params.gamma_c,
        )
    ratio = params.gamma_c / params.gamma
    mean = max(0.0, params.n_atoms * params.gamma**2 * (1.0 - ratio**4))
    return mean + 5.0 * math.sqrt(mean)


def default_cutoff_limit(params):
    if is_superradiant(params):
        return max(1, math.ceil(3.0 * analytic_nmax_bound(params)))
    return DEFAULT_CUTOFF_LIMIT


def _linear_scan(energies, start, limit, epsilon, window=1):
    tried = {}
    run = 0
    for cutoff in range(start, limit + 1):
        tried[cutoff] = energies.delta_e(cutoff)
        run = run + 1 if tried[cutoff] < epsilon else 0
        if run == window:
            return tried, cutoff - window + 1
    return tried, None


def _bisect_scan(energies, start, limit, epsilon, window=1):
    """
    Double the cutoff until the window holds, then bisect the last bracket.
    Returns the linear-scan answer whenever the window keeps holding once it
    first does.
    """
    tried = {}

    def below(cutoff):
        if cutoff not in tried:
            tried[cutoff] = energies.delta_e(cutoff)
        return tried[cutoff] < epsilon

    def converged(cutoff):
        return all(below(c) for c in range(cutoff, cutoff + window))

    last = limit - window + 1
    if converged(start):
        return tried, start
    low, step = start, 1
    while True:
        high = min(start + step, last)
        if high <= low:
            return tried, None
        if converged(high):
            break
        low, step = high, step * 2
    while high - low > 1:
        middle = (low + high) // 2
        if converged(middle):
            high = middle
        else:
            low = middle
    return tried, high


def find_minimal_cutoff(
    params,
    basis_kind,
    level=0,
    cutoff_limit=None,
    scan_policy="linear",
    window=1,
    **solver_options,
):
    """
    Smallest cutoff at which `level` satisfies the ΔE criterion on `window`
    consecutive cutoffs, probing no further than `cutoff_limit`. Hitting the
    limit is reported through `converged=False`, with the full trajectory,
    rather than raised.
    """
    if scan_policy not in SCAN_POLICIES:
        raise InvalidParameters("unknown scan policy", scan_policy=scan_policy)
    if not isinstance(window, int) or window < 1:
        raise InvalidParameters("window must be a positive integer", window=window)
    basis_kind = BasisKind.parse(basis_kind)
    energies = LevelEnergies(params, basis_kind, level, **solver_options)
    start = energies.first_cutoff
    if cutoff_limit is None:
        cutoff_limit = max(default_cutoff_limit(params), start + window - 1)
    if cutoff_limit < start + window - 1:
        raise InvalidParameters(
            "cutoff limit leaves no room for this level",
            cutoff_limit=cutoff_limit,
            level=level,
            window=window,
        )

    scan = _linear_scan if scan_policy == "linear" else _bisect_scan
    tried, found = scan(energies, start, cutoff_limit, params.epsilon, window)
    trajectory = sorted(tried.items())

    if found is None:
        last = trajectory[-1][0]
        logger.warning(
            f"{basis_kind.value} basis: level {level} not converged up to cutoff "
            f"{cutoff_limit} (ΔE={trajectory[-1][1]:.3e}, ε={params.epsilon:g})"
        )
        return ConvergenceReport(
            basis_kind=basis_kind,
            minimal_cutoff=None,
            energy_at_min=energies(last),
            delta_e_trajectory=trajectory,
            level_index=level,
            converged=False,
            cutoff_limit=cutoff_limit,
            scan_policy=scan_policy,
            window=window,
        )

    if scan_policy == "bisect":
        # the report ends at the answer's window
        trajectory = [entry for entry in trajectory if entry[0] < found + window]
    logger.info(
        f"{basis_kind.value} basis: level {level} converged at cutoff {found} "
        f"after {len(trajectory)} cutoffs"
    )
    return ConvergenceReport(
        basis_kind=basis_kind,
        minimal_cutoff=found,
        energy_at_min=energies(found),
        delta_e_trajectory=trajectory,
        level_index=level,
        converged=True,
        cutoff_limit=cutoff_limit,
        scan_policy=scan_policy,
        window=window,
    )


def precision_scan(
    params, basis_kind, cutoff_range, level=0, index_by="lower", **solver_options
):
    """
    ΔE over `cutoff_range` and the straight line through -log10 ΔE against the
    cutoff. Samples at or below the numerical floor are left out of the fit.

    `index_by` picks the cutoff each |E(c + 1) - E(c)| is labelled with:
    "lower" labels it c, "upper" labels it c + 1, the truncation of the
    refined energy. The slope is the same either way; the "upper" intercept
    is lower by one slope.
    """
    if index_by not in PRECISION_INDEXING:
        raise InvalidParameters("unknown precision indexing", index_by=index_by)
    cutoffs = sorted(set(int(c) for c in cutoff_range))
    if not cutoffs:
        raise InvalidParameters("cutoff range is empty", cutoff_range=cutoff_range)
    energies = LevelEnergies(params, basis_kind, level, **solver_options)
    offset = 1 if index_by == "upper" else 0
    trajectory = [(cutoff + offset, energies.delta_e(cutoff)) for cutoff in cutoffs]
    samples = [
        (cutoff, -math.log10(value))
        for cutoff, value in trajectory
        if value > NUMERICAL_FLOOR
    ]
    if len(samples) < 2:
        raise NothingToFit(cutoffs, NUMERICAL_FLOOR)

    x, y = np.array(samples).T
    fit = stats.linregress(x, y)
    logger.info(
        f"precision fit over {len(samples)} samples: "
        f"-log10 ΔE = {fit.intercept:.3f} + {fit.slope:.3f} cutoff"
    )
    return PrecisionFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue**2),
        samples=samples,
        trajectory=trajectory,
        index_by=index_by,
    )
