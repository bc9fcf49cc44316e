import enum
import math
from fractions import Fraction

import attr
import numpy as np

from . import DEFAULT_EPSILON
from .errors import InvalidParameters


class BasisKind(enum.Enum):
    FOCK = "fock"
    COHERENT = "coherent"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameters(
                "unknown basis, expected one of "
                + ", ".join(kind.value for kind in cls),
                basis=value,
            )


def _half_integer(value):
    """Convert `value` (number or string such as "5/2") to a positive
    half-integer, returned as a float. Half-integers are exact in binary
    floating point, so no precision is lost."""
    try:
        fraction = Fraction(str(value)) if isinstance(value, str) else Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise InvalidParameters("j must be a number", j=value)
    if fraction <= 0 or (2 * fraction).denominator != 1:
        raise InvalidParameters("2j must be a positive integer", j=value)
    return float(fraction)


def _finite(instance, attribute, value):
    if not math.isfinite(value):
        raise InvalidParameters(
            f"{attribute.name} must be finite", **{attribute.name: value}
        )


def _positive(instance, attribute, value):
    if not value > 0:
        raise InvalidParameters(
            f"{attribute.name} must be > 0", **{attribute.name: value}
        )


def _non_negative(instance, attribute, value):
    if not value >= 0:
        raise InvalidParameters(
            f"{attribute.name} must be >= 0", **{attribute.name: value}
        )


@attr.s(frozen=True)
class ModelParams:
    """
    Physical parameters of the finite-size Dicke Hamiltonian.

    - omega: frequency of the field mode
    - omega0: atomic excitation energy
    - gamma: atom-field coupling
    - j: pseudospin length, j = N/2 for N atoms (integer or half-integer)
    - epsilon: tolerance of the ΔE convergence criterion

    All energies share the same (arbitrary) unit.
    """

    omega = attr.ib(converter=float, validator=[_finite, _positive])
    omega0 = attr.ib(converter=float, validator=[_finite, _non_negative])
    gamma = attr.ib(converter=float, validator=[_finite, _non_negative])
    j = attr.ib(converter=_half_integer)
    epsilon = attr.ib(
        default=DEFAULT_EPSILON, converter=float, validator=[_finite, _positive]
    )

    @property
    def two_j(self):
        return int(round(2 * self.j))

    @property
    def n_atoms(self):
        return self.two_j

    @property
    def spin_dimension(self):
        return self.two_j + 1

    @property
    def shift_constant(self):
        """G = 2γ / (ω √N), the displacement per unit of J_z."""
        return 2.0 * self.gamma / (self.omega * math.sqrt(self.n_atoms))

    @property
    def gamma_c(self):
        return critical_coupling(self.omega, self.omega0)

    @property
    def superradiant(self):
        return is_superradiant(self)

    def evolve(self, **changes):
        return attr.evolve(self, **changes)

    def to_dict(self):
        return attr.asdict(self)


@attr.s(frozen=True)
class BasisIndex:
    """A product state (bosonic number, angular-momentum projection).

    The projection is kept as `two_m` = 2m so half-integer values compare
    exactly.
    """

    boson = attr.ib(type=int)
    two_m = attr.ib(type=int)

    @property
    def m(self):
        return self.two_m / 2


@attr.s(frozen=True)
class BasisSpec:
    kind = attr.ib(converter=BasisKind.parse)
    cutoff = attr.ib(type=int)
    two_j = attr.ib(type=int)

    @cutoff.validator
    def _check_cutoff(self, attribute, value):
        if not isinstance(value, (int, np.integer)) or value < 0:
            raise InvalidParameters(
                "cutoff must be a non-negative integer", cutoff=value
            )

    @two_j.validator
    def _check_two_j(self, attribute, value):
        if value < 1:
            raise InvalidParameters("2j must be a positive integer", two_j=value)

    @classmethod
    def for_params(cls, kind, params, cutoff):
        return cls(kind=kind, cutoff=cutoff, two_j=params.two_j)

    @property
    def spin_dimension(self):
        return self.two_j + 1

    @property
    def dimension(self):
        return (self.cutoff + 1) * self.spin_dimension

    def flatten(self, index):
        if not 0 <= index.boson <= self.cutoff:
            raise InvalidParameters("boson number out of range", boson=index.boson)
        if abs(index.two_m) > self.two_j or (index.two_m + self.two_j) % 2:
            raise InvalidParameters("projection out of range", m=index.m)
        return index.boson * self.spin_dimension + (index.two_m + self.two_j) // 2

    def unflatten(self, flat):
        if not 0 <= flat < self.dimension:
            raise InvalidParameters("flat index out of range", index=flat)
        boson, offset = divmod(flat, self.spin_dimension)
        return BasisIndex(boson=boson, two_m=2 * offset - self.two_j)

    def __iter__(self):
        for flat in range(self.dimension):
            yield self.unflatten(flat)


def critical_coupling(omega, omega0):
    """Coupling at which the thermodynamic-limit transition takes place."""
    if not omega > 0:
        raise InvalidParameters("omega must be > 0", omega=omega)
    if not omega0 >= 0:
        raise InvalidParameters("omega0 must be >= 0", omega0=omega0)
    return math.sqrt(omega * omega0) / 2.0


def is_superradiant(params):
    """True when γ > γ_c. The boundary itself belongs to the normal phase."""
    return params.gamma > critical_coupling(params.omega, params.omega0)


def _check_projection(j, m):
    two_j = Fraction(j) * 2
    two_m = Fraction(m) * 2
    if two_j.denominator != 1 or two_j <= 0:
        raise InvalidParameters("2j must be a positive integer", j=j)
    if two_m.denominator != 1 or abs(two_m) > two_j or (two_j - two_m) % 2:
        raise InvalidParameters("m must lie in -j..j in unit steps", j=j, m=m)


def jz_element(j, m):
    _check_projection(j, m)
    return float(m)


def jpm_element(j, m, direction):
    """<j, m±1| J± |j, m>; zero when m±1 leaves the multiplet."""
    _check_projection(j, m)
    if direction in ("+", 1):
        sign = 1
    elif direction in ("-", -1):
        sign = -1
    else:
        raise InvalidParameters("direction must be '+' or '-'", direction=direction)
    if abs(m + sign) > j:
        return 0.0
    return math.sqrt(j * (j + 1) - m * (m + sign))


def projections(two_j):
    """m values of the multiplet in basis order, -j first."""
    return (np.arange(two_j + 1) * 2 - two_j) / 2.0


def raising_elements(two_j):
    """<m+1|J+|m> for every m in basis order; the entry for m = j is zero."""
    j = two_j / 2.0
    m = projections(two_j)
    return np.sqrt(np.clip(j * (j + 1) - m * (m + 1), 0.0, None))


def spin_matrices(two_j):
    """Dense (J_z, J_+, J_-) on the 2j+1 dimensional multiplet."""
    jz = np.diag(projections(two_j))
    jp = np.diag(raising_elements(two_j)[:-1], k=-1)
    return jz, jp, jp.T.copy()
