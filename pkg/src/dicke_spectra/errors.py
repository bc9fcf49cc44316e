class DickeSpectraError(Exception):
    """Base class of every error raised by dicke_spectra."""


class InvalidParameters(DickeSpectraError, ValueError):
    def __init__(self, message, **values) -> None:
        if values:
            details = ", ".join(f"{key}={value!r}" for key, value in values.items())
            message = f"{message} ({details})"
        super().__init__(message)


class DimensionOverflow(DickeSpectraError, OverflowError):
    def __init__(self, dimension, nnz_estimate, limit) -> None:
        message = (
            f"Basis dimension {dimension} needs up to {nnz_estimate} stored "
            f"entries, which does not fit the {limit} index limit of the "
            "matrix storage. Lower the cutoff."
        )
        super().__init__(message)
        self.dimension = dimension
        self.nnz_estimate = nnz_estimate
        self.limit = limit


class KernelPrecisionError(DickeSpectraError, ArithmeticError):
    def __init__(self, shift, cutoff, reason, worst=None) -> None:
        message = f"Displaced-overlap table for G={shift!r}, cutoff={cutoff} {reason}"
        if worst is not None:
            message += f" (worst entry at {worst[0]}: {worst[1]:.3e})"
        super().__init__(message)
        self.shift = shift
        self.cutoff = cutoff
        self.worst = worst


class EigensolverError(DickeSpectraError, RuntimeError):
    def __init__(self, reason, **diagnostics) -> None:
        details = ", ".join(f"{key}={value}" for key, value in diagnostics.items())
        super().__init__(f"Eigensolver failed: {reason} [{details}]")
        self.diagnostics = diagnostics


class NothingToFit(DickeSpectraError):
    def __init__(self, cutoffs, floor) -> None:
        super().__init__(
            f"Fewer than two ΔE values above {floor:g} for cutoffs "
            f"{list(cutoffs)}: the energy is exact there, nothing to fit."
        )
        self.cutoffs = list(cutoffs)


class NonConvergence(DickeSpectraError):
    """Raised by the command line when a scan hits its cutoff limit."""

    def __init__(self, report) -> None:
        super().__init__(
            f"{report.basis_kind.value} basis did not converge for level "
            f"{report.level_index} below cutoff {report.cutoff_limit}"
        )
        self.report = report
