import argparse
import logging
import os
import sys
import traceback
from collections import namedtuple

import appdirs
import yaml

from dicke_spectra import DEFAULT_EPSILON

Command = namedtuple("Command", ["func", "args", "kwargs", "defaults"])
commands = {}

EXIT_NON_CONVERGENCE = 2
EXIT_INVALID_PARAMETERS = 3
EXIT_SOLVER_FAILURE = 4


def command(*args, **kwargs):
    defaults = kwargs.pop("defaults", {})

    def decorator(func):
        commands[args[0]] = Command(func, args, kwargs, defaults)
        return func

    return decorator


def argument(*args, **kwargs):
    def decorator(func):
        if not hasattr(func, "args"):
            func.args = []
        func.args.append((args, kwargs))
        return func

    return decorator


def _number(text):
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    # fractions such as 5/2 for j
    return text


def parse_grid(text):
    """`a,b,c` for an explicit grid, `start:stop[:step]` for an inclusive range."""
    if ":" in text:
        parts = [_number(part) for part in text.split(":")]
        if len(parts) not in (2, 3):
            raise argparse.ArgumentTypeError(
                f"expected start:stop[:step], got {text!r}"
            )
        grid = {"start": parts[0], "stop": parts[1]}
        if len(parts) == 3:
            grid["step"] = parts[2]
        return grid
    return [_number(part) for part in text.split(",") if part.strip()]


MODEL_ARGUMENTS = [
    (("--omega",), {"type": float, "help": "field frequency ω (default 1)"}),
    (("--omega0",), {"type": float, "help": "atomic splitting ω0 (default 1)"}),
    (("--gamma",), {"type": float, "help": "coupling γ"}),
    (("--j",), {"type": _number, "help": "pseudospin length N/2, e.g. 10 or 5/2"}),
    (("--epsilon",), {"type": float, "help": "ΔE tolerance (default 1e-6)"}),
    (("--basis",), {"choices": ["fock", "coherent", "both"], "help": "default both"}),
    (("--level",), {"type": int, "help": "sorted level index, 0 is the ground state"}),
    (("--cutoff",), {"type": int, "help": "fixed bosonic cutoff, skips the scan"}),
    (("--cutoff-limit",), {"type": int, "help": "largest cutoff a scan may try"}),
    (("--scan-policy",), {"choices": ["linear", "bisect"], "help": "default linear"}),
    (
        ("--window",),
        {"type": int, "help": "consecutive cutoffs ΔE must stay below ε (default 1)"},
    ),
    (("--config",), {"help": "flat YAML run configuration; flags win over it"}),
    (("--preset",), {"help": "named configuration shipped with the package"}),
    (("--out", "-o"), {"help": "output file, stdout when omitted"}),
    (("--workers",), {"type": int, "help": "worker processes for sweeps"}),
    (("--quiet", "-q"), {"action": "store_true", "help": "only log warnings"}),
    (("--verbose", "-v"), {"action": "store_true", "help": "log debug messages"}),
]


def model_arguments(func):
    """The flags every model sub-command shares."""
    for args, kwargs in reversed(MODEL_ARGUMENTS):
        func = argument(*args, **kwargs)(func)
    return func


def _resolve(options):
    from dicke_spectra.config import resolve_options

    if options.pop("verbose", False):
        logging.root.setLevel(logging.DEBUG)
    if options.pop("quiet", False):
        logging.root.setLevel(logging.WARNING)
    return resolve_options(
        options, config_path=options.get("config"), preset=options.get("preset")
    )


def _dump(document, path=None):
    text = yaml.safe_dump(document, default_flow_style=False, sort_keys=False)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")


def _worker_log_dir(config, log_dir=None):
    if config.workers <= 1:
        return None
    # Log to separate files for each worker instead of stderr to avoid
    # interleaving.
    log_dir = log_dir or appdirs.user_log_dir("dicke-spectra")
    if not os.path.isdir(log_dir):
        os.makedirs(log_dir)
    return log_dir


def _sweep_config(opts, swept_parameter=None, basis=None):
    from dicke_spectra.config import basis_kinds, expand_grid, params_from_options
    from dicke_spectra.errors import InvalidParameters
    from dicke_spectra.sweep import SweepConfig

    swept = swept_parameter or opts.get("swept_parameter")
    if swept is None:
        raise InvalidParameters("a sweep needs --swept-parameter (or swept_parameter)")
    grid = expand_grid(opts.get("grid") or [])
    if swept != "cutoff" and opts.get(swept) is None and grid:
        opts = dict(opts, **{swept: grid[0]})
    if not grid and opts.get(swept) is None:
        # an empty sweep still needs a template
        opts = dict(opts, **{swept: {"j": 1, "gamma": 0.0, "omega0": 1.0}.get(swept)})
    return SweepConfig(
        swept_parameter=swept,
        grid=grid,
        fixed=params_from_options(opts),
        basis_kinds=basis_kinds(basis or opts["basis"]),
        output_path=opts.get("out"),
        level=opts["level"],
        cutoff=opts.get("cutoff"),
        cutoff_limit=opts.get("cutoff_limit"),
        scan_policy=opts["scan_policy"],
        window=opts["window"],
        workers=opts["workers"],
        record_timing=opts.get("record_timing", False),
    )


@command("gs", help="Ground (or excited) level energy at the converged cutoff.")
@model_arguments
def ground_state(options):
    from dicke_spectra.config import basis_kinds, params_from_options
    from dicke_spectra.convergence import LevelEnergies, find_minimal_cutoff
    from dicke_spectra.errors import NonConvergence

    opts = _resolve(options)
    params = params_from_options(opts)
    results = {}
    failed = None
    for kind in basis_kinds(opts["basis"]):
        if opts.get("cutoff") is not None:
            energies = LevelEnergies(params, kind, opts["level"])
            delta = energies.delta_e(opts["cutoff"])
            result = {
                "energy": energies(opts["cutoff"]),
                "cutoff": opts["cutoff"],
                "delta_e": delta,
                "converged": bool(delta < params.epsilon),
            }
        else:
            report = find_minimal_cutoff(
                params,
                kind,
                level=opts["level"],
                cutoff_limit=opts.get("cutoff_limit"),
                scan_policy=opts["scan_policy"],
                window=opts["window"],
            )
            result = {
                "energy": report.energy_at_min,
                "cutoff": report.minimal_cutoff
                if report.converged
                else report.last_cutoff,
                "delta_e": report.delta_e,
                "converged": report.converged,
            }
            if not report.converged:
                failed = report
        results[kind] = dict(level=opts["level"], **result)
    _dump(results, opts.get("out"))
    if failed is not None:
        raise NonConvergence(failed)


@command("sweep", help="Minimal cutoffs (or ΔE) over a parameter grid, as CSV.")
@model_arguments
@argument(
    "--swept-parameter",
    choices=["j", "gamma", "omega0", "cutoff"],
    help="parameter the grid runs over",
)
@argument("--grid", type=parse_grid, help="a,b,c or start:stop[:step]")
@argument(
    "--record-timing",
    action="store_true",
    default=None,
    help="fill the wall_ms column (makes the CSV body run-dependent)",
)
@argument(
    "--no-timestamp",
    action="store_true",
    help="leave the generation timestamp out of the CSV header",
)
@argument("--log-dir", default=None, help="directory for per-worker log files")
def sweep(options):
    from dicke_spectra.sweep import SWEEP_COLUMNS, run_sweep, write_table

    no_timestamp = options.pop("no_timestamp", False)
    log_dir = options.pop("log_dir", None)
    record_timing = bool(options.pop("record_timing", False))
    opts = _resolve(options)
    opts["record_timing"] = record_timing
    config = _sweep_config(opts)

    records = run_sweep(config, log_dir=_worker_log_dir(config, log_dir))
    write_table(
        config.output_path,
        SWEEP_COLUMNS,
        [record.to_row() for record in records],
        timestamp=not no_timestamp,
    )


@command("bound", help="Fock minimal cutoff against the analytic estimate, as CSV.")
@model_arguments
@argument(
    "--swept-parameter",
    choices=["j", "gamma", "omega0"],
    default=None,
    help="parameter the grid runs over (default gamma)",
)
@argument("--grid", type=parse_grid, help="a,b,c or start:stop[:step]")
@argument(
    "--no-timestamp",
    action="store_true",
    help="leave the generation timestamp out of the CSV header",
)
@argument("--log-dir", default=None, help="directory for per-worker log files")
def bound(options):
    from dicke_spectra.sweep import BOUND_COLUMNS, bound_rows, write_table

    no_timestamp = options.pop("no_timestamp", False)
    log_dir = options.pop("log_dir", None)
    opts = _resolve(options)
    swept = opts.get("swept_parameter") or "gamma"
    config = _sweep_config(opts, swept_parameter=swept, basis="fock")
    rows = bound_rows(config, log_dir=_worker_log_dir(config, log_dir))
    write_table(
        config.output_path,
        BOUND_COLUMNS,
        rows,
        timestamp=not no_timestamp,
    )


@command("precision", help="ΔE against the cutoff and its log-linear fit.")
@model_arguments
@argument("--cutoff-range", type=parse_grid, help="start:stop[:step] or a,b,c")
@argument(
    "--index-by",
    choices=["lower", "upper"],
    default=None,
    help="label each ΔE with the lower (default) or upper cutoff of its pair",
)
@argument(
    "--no-timestamp",
    action="store_true",
    help="leave the generation timestamp out of the CSV header",
)
def precision(options):
    from dicke_spectra.config import basis_kinds, expand_grid, params_from_options
    from dicke_spectra.convergence import precision_scan
    from dicke_spectra.errors import InvalidParameters
    from dicke_spectra.sweep import PRECISION_COLUMNS, precision_rows, write_table

    no_timestamp = options.pop("no_timestamp", False)
    opts = _resolve(options)
    params = params_from_options(opts)
    if not opts.get("cutoff_range"):
        raise InvalidParameters("precision needs --cutoff-range (or cutoff_range)")
    cutoffs = expand_grid(opts["cutoff_range"])
    kinds = basis_kinds(opts["basis"])
    summary = {}
    for kind in kinds:
        fit = precision_scan(
            params, kind, cutoffs, level=opts["level"], index_by=opts["index_by"]
        )
        out = opts.get("out")
        if out and len(kinds) > 1:
            name, ext = os.path.splitext(out)
            out = f"{name}_{kind}{ext}"
        rows = precision_rows(fit)
        write_table(out, PRECISION_COLUMNS, rows, timestamp=not no_timestamp)
        summary[kind] = {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "prefactor": fit.prefactor,
            "index_by": fit.index_by,
            "samples": len(fit.samples),
        }
    # the fit summary shares stdout only when the tables went to files
    stream = sys.stdout if opts.get("out") else sys.stderr
    print(yaml.safe_dump(summary, sort_keys=False), end="", file=stream)


@command("replay", help="Re-run the rows of a sweep CSV and compare energies.")
@argument("csv_path", help="CSV written by `dicke-spectra sweep`")
@argument("--tolerance", type=float, default=1e-10, help="allowed energy deviation")
@argument(
    "--epsilon",
    type=float,
    default=DEFAULT_EPSILON,
    help="ΔE tolerance the table was solved with (not stored in the CSV)",
)
def replay(options):
    from dicke_spectra.sweep import read_records
    from dicke_spectra.sweep import replay as replay_records

    records = read_records(options["csv_path"], epsilon=options["epsilon"])
    mismatches = replay_records(records, tolerance=options["tolerance"])
    print(f"{len(records) - len(mismatches)}/{len(records)} rows reproduced")
    if mismatches:
        return EXIT_NON_CONVERGENCE


@command("kernel", help="Displaced-number-state overlap table for a given shift.")
@argument("--shift", type=float, required=True, help="displacement G")
@argument("--cutoff", type=int, required=True, help="largest number state")
@argument("--verify", action="store_true", help="check against the brute-force oracle")
@argument("--out", "-o", default=None, help="write the table as CSV")
def kernel(options):
    from dicke_spectra.hamiltonian.overlap import (
        kernel_table,
        unitarity_defect,
        verify_kernel,
    )
    from dicke_spectra.sweep import write_table

    table = kernel_table(options["shift"], options["cutoff"])
    summary = {
        "shift": options["shift"],
        "cutoff": options["cutoff"],
        "unitarity_defect": [float(d) for d in unitarity_defect(table)],
    }
    if options["verify"]:
        summary["oracle_deviation"] = verify_kernel(options["shift"], options["cutoff"])
    if options["out"]:
        columns = ["n_prime"] + [str(n) for n in range(table.shape[1])]
        rows = [
            dict(n_prime=n_prime, **{str(n): float(v) for n, v in enumerate(row)})
            for n_prime, row in enumerate(table)
        ]
        write_table(options["out"], columns, rows, timestamp=False)
    _dump(summary)


@command("presets", help="List the shipped configuration presets.")
def presets(options):
    from dicke_spectra.paths import list_presets

    print("\n".join(list_presets()))


def create_parser():
    parser = argparse.ArgumentParser(
        description="Diagonalize the finite-size Dicke Hamiltonian and study "
        "its bosonic truncation."
    )
    subparsers = parser.add_subparsers()
    for _, (func, args, kwargs, defaults) in commands.items():
        subparser = subparsers.add_parser(*args, **kwargs)
        func_args = getattr(func, "args", [])
        for arg in func_args:
            subparser.add_argument(*arg[0], **arg[1])
        subparser.set_defaults(command=func, **defaults)
    return parser


def setup_logging():
    logging.basicConfig(
        format="%(asctime)s - %(levelname)s - %(message)s", level=logging.INFO
    )


def main(args=sys.argv[1:]):
    from dicke_spectra.errors import (
        InvalidParameters,
        NonConvergence,
        NothingToFit,
    )

    setup_logging()
    parser = create_parser()
    args = parser.parse_args(args)
    if not hasattr(args, "command"):
        parser.print_help()
        sys.exit(EXIT_INVALID_PARAMETERS)
    try:
        status = args.command(vars(args))
    except NonConvergence as e:
        print(f"error: {e}", file=sys.stderr)
        trajectory = [
            {"cutoff": cutoff, "delta_e": delta}
            for cutoff, delta in e.report.delta_e_trajectory
        ]
        print(yaml.safe_dump({"trajectory": trajectory}), file=sys.stderr)
        sys.exit(EXIT_NON_CONVERGENCE)
    except (InvalidParameters, NothingToFit) as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(EXIT_INVALID_PARAMETERS)
    except Exception:
        traceback.print_exc()
        sys.exit(EXIT_SOLVER_FAILURE)
    if status:
        sys.exit(status)
