import csv
import datetime
import io
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed

import attr
from voluptuous import Any, Boolean, Coerce, Required

from . import DEFAULT_EPSILON, VERSION
from .convergence import LevelEnergies, analytic_nmax_bound, find_minimal_cutoff
from .errors import DickeSpectraError, InvalidParameters
from .model import BasisKind, ModelParams, is_superradiant
from .util.schema import Schema, validate_schema

logger = logging.getLogger(__name__)

SWEPT_PARAMETERS = ("j", "gamma", "omega0", "cutoff")

SWEEP_COLUMNS = (
    "omega",
    "omega0",
    "gamma",
    "j",
    "basis",
    "level",
    "min_cutoff",
    "energy",
    "delta_e",
    "converged",
    "wall_ms",
)

BOUND_COLUMNS = (
    "gamma",
    "j",
    "omega",
    "omega0",
    "gamma_c",
    "phase",
    "n_max_scan",
    "n_max_eq4",
    "relative_difference",
    "flag",
)

PRECISION_COLUMNS = ("cutoff", "delta_e", "minus_log10_delta_e", "used_in_fit")

optional_float = Any("", Coerce(float))
optional_int = Any("", Coerce(int))

sweep_row_schema = Schema(
    {
        Required("omega"): Coerce(float),
        Required("omega0"): Coerce(float),
        Required("gamma"): Coerce(float),
        Required("j"): Coerce(float),
        Required("basis"): Any("fock", "coherent"),
        Required("level"): Coerce(int),
        Required("min_cutoff"): optional_int,
        Required("energy"): optional_float,
        Required("delta_e"): optional_float,
        Required("converged"): Boolean(),
        Required("wall_ms"): optional_int,
    }
)


def _parse_kinds(kinds):
    return tuple(BasisKind.parse(kind) for kind in kinds)


def _check_grid(instance, attribute, grid):
    fixed = instance.fixed
    for value in grid:
        if instance.swept_parameter == "cutoff":
            if not isinstance(value, int) or value < 0:
                raise InvalidParameters(
                    "cutoff grid holds non-negative integers", value=value
                )
        else:
            # ModelParams validates the value (j half-integer, γ, ω0 >= 0)
            fixed.evolve(**{instance.swept_parameter: value})


@attr.s(frozen=True)
class SweepConfig:
    swept_parameter = attr.ib(validator=attr.validators.in_(SWEPT_PARAMETERS))
    grid = attr.ib(converter=tuple, validator=_check_grid)
    fixed = attr.ib(type=ModelParams)
    basis_kinds = attr.ib(converter=_parse_kinds)
    output_path = attr.ib(default=None)
    level = attr.ib(default=0)
    cutoff = attr.ib(default=None)
    cutoff_limit = attr.ib(default=None)
    scan_policy = attr.ib(default="linear")
    window = attr.ib(default=1)
    workers = attr.ib(default=1)
    record_timing = attr.ib(default=False)

    def points(self):
        """(params, basis kind, fixed cutoff or None) in grid order."""
        for value in self.grid:
            if self.swept_parameter == "cutoff":
                params, cutoff = self.fixed, value
            else:
                params = self.fixed.evolve(**{self.swept_parameter: value})
                cutoff = self.cutoff
            for kind in self.basis_kinds:
                yield params, kind, cutoff


@attr.s(frozen=True)
class RunRecord:
    """One CSV row: a solved (parameters, basis) point."""

    params = attr.ib(type=ModelParams)
    basis_kind = attr.ib(converter=BasisKind.parse)
    level = attr.ib(type=int)
    cutoff = attr.ib()
    energy = attr.ib()
    delta_e = attr.ib()
    converged = attr.ib(type=bool)
    wall_ms = attr.ib(default=None)
    version = attr.ib(default=VERSION)

    def to_row(self):
        return {
            "omega": self.params.omega,
            "omega0": self.params.omega0,
            "gamma": self.params.gamma,
            "j": self.params.j,
            "basis": self.basis_kind.value,
            "level": self.level,
            "min_cutoff": self.cutoff,
            "energy": self.energy,
            "delta_e": self.delta_e,
            "converged": self.converged,
            "wall_ms": self.wall_ms,
        }

    @classmethod
    def from_row(cls, row, version=VERSION, epsilon=DEFAULT_EPSILON):
        """
        Rebuild a record from a CSV row. The table has no ε column, so the
        tolerance the row was solved with has to be passed as `epsilon`.
        """
        row = validate_schema(sweep_row_schema, dict(row), "Invalid sweep row:")
        return cls(
            params=ModelParams(
                omega=row["omega"],
                omega0=row["omega0"],
                gamma=row["gamma"],
                j=row["j"],
                epsilon=epsilon,
            ),
            basis_kind=row["basis"],
            level=row["level"],
            cutoff=None if row["min_cutoff"] == "" else row["min_cutoff"],
            energy=None if row["energy"] == "" else row["energy"],
            delta_e=None if row["delta_e"] == "" else row["delta_e"],
            converged=row["converged"],
            wall_ms=None if row["wall_ms"] == "" else row["wall_ms"],
            version=version,
        )


def solve_point(
    params,
    basis_kind,
    level=0,
    cutoff=None,
    cutoff_limit=None,
    scan_policy="linear",
    window=1,
):
    """
    Energy of `level` either at a fixed cutoff (with the ΔE to the next
    cutoff) or at the minimal converged cutoff found by a scan.
    """
    started = time.monotonic()
    if cutoff is not None:
        energies = LevelEnergies(params, basis_kind, level)
        energy = energies(cutoff)
        delta = energies.delta_e(cutoff)
        converged = delta < params.epsilon
    else:
        report = find_minimal_cutoff(
            params,
            basis_kind,
            level=level,
            cutoff_limit=cutoff_limit,
            scan_policy=scan_policy,
            window=window,
        )
        cutoff = report.minimal_cutoff if report.converged else report.last_cutoff
        energy, delta = report.energy_at_min, report.delta_e
        converged = report.converged
    return RunRecord(
        params=params,
        basis_kind=basis_kind,
        level=level,
        cutoff=cutoff,
        energy=energy,
        delta_e=delta,
        converged=converged,
        wall_ms=int(round(1000 * (time.monotonic() - started))),
    )


def _setup_worker_logging(logfile):
    if logfile is None:
        return
    root = logging.getLogger()
    formatter = root.handlers[-1].formatter if root.handlers else None
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.FileHandler(logfile, mode="w")
    if formatter:
        handler.setFormatter(formatter)
    root.addHandler(handler)


def _run_point(config, params, basis_kind, cutoff, logfile=None):
    _setup_worker_logging(logfile)
    try:
        record = solve_point(
            params,
            basis_kind,
            level=config.level,
            cutoff=cutoff,
            cutoff_limit=config.cutoff_limit,
            scan_policy=config.scan_policy,
            window=config.window,
        )
    except DickeSpectraError as exc:
        logger.warning(f"{basis_kind.value} point {attr.asdict(params)} failed: {exc}")
        record = RunRecord(
            params=params,
            basis_kind=basis_kind,
            level=config.level,
            cutoff=cutoff,
            energy=None,
            delta_e=None,
            converged=False,
        )
    if not config.record_timing:
        record = attr.evolve(record, wall_ms=None)
    return record


def run_sweep(config, log_dir=None):
    """
    Solve every grid point for every basis. Records come back in grid order
    whatever order the workers finish in.
    """
    points = list(config.points())
    if config.workers <= 1 or len(points) <= 1:
        records = []
        for params, kind, cutoff in points:
            records.append(_run_point(config, params, kind, cutoff))
            logger.info(f"finished {len(records)}/{len(points)} points")
        return records

    def logfile(index, kind):
        if log_dir is None:
            return None
        return os.path.join(log_dir, f"point_{index:04d}_{kind.value}.log")

    records = [None] * len(points)
    with ProcessPoolExecutor(max_workers=config.workers) as executor:
        futures = {
            executor.submit(
                _run_point, config, params, kind, cutoff, logfile(i, kind)
            ): i
            for i, (params, kind, cutoff) in enumerate(points)
        }
        for done, future in enumerate(as_completed(futures), start=1):
            records[futures[future]] = future.result()
            logger.info(f"finished {done}/{len(points)} points")
    return records


def bound_rows(config, log_dir=None):
    """
    Fock minimal cutoff against the analytic estimate, one row per grid
    point. The scans go through `run_sweep`, so `config.workers` applies.
    Normal-phase points are flagged and carry no estimate.
    """
    if config.swept_parameter == "cutoff":
        raise InvalidParameters("the bound comparison scans the cutoff itself")
    config = attr.evolve(config, basis_kinds=["fock"], cutoff=None)
    rows = []
    for record in run_sweep(config, log_dir=log_dir):
        params = record.params
        row = {
            "gamma": params.gamma,
            "j": params.j,
            "omega": params.omega,
            "omega0": params.omega0,
            "gamma_c": params.gamma_c,
            "phase": "superradiant" if is_superradiant(params) else "normal",
            "n_max_scan": None,
            "n_max_eq4": None,
            "relative_difference": None,
            "flag": "",
        }
        if record.converged:
            row["n_max_scan"] = record.cutoff
        else:
            row["flag"] = "not-converged"
        if is_superradiant(params):
            estimate = analytic_nmax_bound(params)
            row["n_max_eq4"] = estimate
            if record.converged and estimate > 0:
                difference = record.cutoff - estimate
                row["relative_difference"] = difference / estimate
        else:
            logger.warning(f"γ={params.gamma} is not superradiant, no estimate")
            row["flag"] = "normal-phase"
        rows.append(row)
    return rows


def precision_rows(fit):
    used = {cutoff for cutoff, _ in fit.samples}
    return [
        {
            "cutoff": cutoff,
            "delta_e": value,
            "minus_log10_delta_e": -math.log10(value) if value > 0 else None,
            "used_in_fit": cutoff in used,
        }
        for cutoff, value in fit.trajectory
    ]


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_table(columns, rows, timestamp=None):
    """
    CSV text with the version comment, an optional timestamp comment and the
    column header. Everything below the comments depends on the rows only.
    """
    out = io.StringIO()
    out.write(f"# dicke-spectra v{VERSION}\n")
    if timestamp:
        out.write(f"# generated {timestamp}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[column]) for column in columns])
    return out.getvalue()


def write_table(path, columns, rows, timestamp=True):
    if timestamp is True:
        now = datetime.datetime.now(datetime.timezone.utc)
        timestamp = now.isoformat(timespec="seconds")
    text = format_table(columns, rows, timestamp or None)
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)
    logger.info(f"wrote {len(rows)} rows to {path}")


def read_table(path):
    """Return (version, rows as dicts) of a table written by `write_table`."""
    version = None
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# dicke-spectra v") and version is None:
                    version = line.strip()[len("# dicke-spectra v"):]
                continue
            lines.append(line)
    return version, list(csv.DictReader(lines))


def read_records(path, epsilon=DEFAULT_EPSILON):
    version, rows = read_table(path)
    if version is None:
        raise InvalidParameters(f"{path} lacks the dicke-spectra version header")
    return [RunRecord.from_row(row, version=version, epsilon=epsilon) for row in rows]


def replay(records, tolerance=1e-10):
    """
    Re-solve every record at its recorded cutoff. Returns the records whose
    energy differs from the recorded one by more than `tolerance`.
    """
    mismatches = []
    for record in records:
        if record.energy is None or record.cutoff is None:
            continue
        energies = LevelEnergies(record.params, record.basis_kind, record.level)
        energy = energies(record.cutoff)
        if abs(energy - record.energy) > tolerance:
            logger.warning(
                f"{record.basis_kind.value} row at cutoff {record.cutoff} "
                f"re-ran to {energy!r}, recorded {record.energy!r}"
            )
            mismatches.append((record, energy))
    return mismatches
