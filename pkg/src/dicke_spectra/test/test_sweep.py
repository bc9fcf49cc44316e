import attr
import pytest

from dicke_spectra import VERSION
from dicke_spectra.convergence import PrecisionFit, find_minimal_cutoff
from dicke_spectra.errors import InvalidParameters
from dicke_spectra.model import BasisKind
from dicke_spectra.sweep import (
    BOUND_COLUMNS,
    PRECISION_COLUMNS,
    SWEEP_COLUMNS,
    RunRecord,
    SweepConfig,
    bound_rows,
    format_table,
    precision_rows,
    read_records,
    read_table,
    replay,
    run_sweep,
    solve_point,
    write_table,
)


@pytest.fixture
def make_config(make_params):
    def inner(swept_parameter="j", grid=(1, 2), **kwargs):
        kwargs.setdefault("fixed", make_params(gamma=0.0, j=1))
        kwargs.setdefault("basis_kinds", ["fock"])
        return SweepConfig(swept_parameter=swept_parameter, grid=grid, **kwargs)

    return inner


@pytest.mark.parametrize(
    "swept_parameter,grid",
    (
        ("j", [1, 0.3]),
        ("j", [0]),
        ("gamma", [0.5, -0.1]),
        ("omega0", [-1]),
        ("cutoff", [2, -1]),
        ("cutoff", [1.5]),
    ),
)
def test_invalid_grid(make_config, swept_parameter, grid):
    with pytest.raises(InvalidParameters):
        make_config(swept_parameter=swept_parameter, grid=grid)


def test_invalid_swept_parameter(make_config):
    with pytest.raises(ValueError):
        make_config(swept_parameter="omega")


def test_points_in_grid_order(make_config):
    config = make_config(grid=[2, "1/2"], basis_kinds=["fock", "coherent"])
    points = list(config.points())
    assert [(params.j, kind) for params, kind, _ in points] == [
        (2.0, BasisKind.FOCK),
        (2.0, BasisKind.COHERENT),
        (0.5, BasisKind.FOCK),
        (0.5, BasisKind.COHERENT),
    ]
    assert all(cutoff is None for _, _, cutoff in points)


def test_cutoff_points(make_config, make_params):
    fixed = make_params(gamma=0.5, j=3)
    config = make_config(swept_parameter="cutoff", grid=[0, 4], fixed=fixed)
    assert [(params, cutoff) for params, _, cutoff in config.points()] == [
        (fixed, 0),
        (fixed, 4),
    ]


def test_solve_point_scans(make_params):
    record = solve_point(make_params(gamma=0.0, j=10), "fock", cutoff_limit=5)
    assert record.converged
    assert record.cutoff == 0
    assert record.energy == pytest.approx(-10.0, abs=1e-12)
    assert record.wall_ms >= 0
    assert record.version == VERSION


def test_solve_point_fixed_cutoff(make_params):
    record = solve_point(make_params(gamma=0.5, j=2), "coherent", cutoff=3)
    assert record.cutoff == 3
    assert record.delta_e > 0
    assert record.converged is (record.delta_e < 1e-6)


def test_run_sweep(make_config):
    records = run_sweep(make_config(grid=[1, 2, 3]))
    assert [record.energy for record in records] == pytest.approx([-1, -2, -3])
    assert all(record.cutoff == 0 for record in records)
    assert all(record.wall_ms is None for record in records)


def test_run_sweep_records_timing(make_config):
    records = run_sweep(make_config(record_timing=True))
    assert all(isinstance(record.wall_ms, int) for record in records)


def test_run_sweep_point_failure(make_config, make_params):
    config = make_config(
        grid=[0.5, 3],
        fixed=make_params(gamma=0.3, j=1),
        cutoff=0,
        level=5,
    )
    failed, solved = run_sweep(config)
    assert not failed.converged
    assert failed.energy is None
    assert failed.params.j == 0.5
    assert solved.energy is not None


def test_run_sweep_empty(make_config):
    config = make_config(grid=[])
    assert run_sweep(config) == []
    assert format_table(SWEEP_COLUMNS, []) == (
        f"# dicke-spectra v{VERSION}\n" + ",".join(SWEEP_COLUMNS) + "\n"
    )


def test_workers_match_serial(make_config, make_params, tmpdir):
    config = make_config(
        swept_parameter="gamma",
        grid=[0.2, 0.6, 1.0],
        fixed=make_params(gamma=0.2, j=2),
        basis_kinds=["fock", "coherent"],
    )
    serial = run_sweep(config)
    parallel = run_sweep(attr.evolve(config, workers=2), log_dir=tmpdir.strpath)
    assert parallel == serial
    assert len(tmpdir.listdir()) == len(serial)


def test_cells_are_exact(make_config):
    records = run_sweep(make_config(grid=["3/2"]))
    text = format_table(SWEEP_COLUMNS, [record.to_row() for record in records])
    header, row = text.splitlines()[1:]
    assert header == ",".join(SWEEP_COLUMNS)
    energy, delta = records[0].energy, records[0].delta_e
    assert row == f"1.0,1.0,0.0,1.5,fock,0,0,{energy!r},{delta!r},true,"


def test_body_is_reproducible(make_config, make_params):
    config = make_config(
        swept_parameter="gamma",
        grid=[0.4, 0.9],
        fixed=make_params(gamma=0.4, j=3),
        basis_kinds=["coherent"],
    )
    texts = [
        format_table(SWEEP_COLUMNS, [r.to_row() for r in run_sweep(config)])
        for _ in range(2)
    ]
    assert texts[0] == texts[1]


def test_write_table_timestamp(tmpdir):
    path = tmpdir.join("out.csv").strpath
    write_table(path, PRECISION_COLUMNS, [], timestamp="2013-01-01T00:00:00+00:00")
    lines = open(path).read().splitlines()
    assert lines[0] == f"# dicke-spectra v{VERSION}"
    assert lines[1] == "# generated 2013-01-01T00:00:00+00:00"
    write_table(path, PRECISION_COLUMNS, [])
    assert open(path).read().splitlines()[1].startswith("# generated ")


def test_write_table_to_stdout(capsys):
    write_table(None, PRECISION_COLUMNS, [], timestamp=False)
    out, _ = capsys.readouterr()
    assert out == f"# dicke-spectra v{VERSION}\n" + ",".join(PRECISION_COLUMNS) + "\n"


def test_round_trip_and_replay(make_config, make_params, tmpdir):
    config = make_config(
        swept_parameter="gamma",
        grid=[0.3, 0.7],
        fixed=make_params(gamma=0.3, j=1.5),
        basis_kinds=["fock", "coherent"],
        record_timing=True,
    )
    records = run_sweep(config)
    path = tmpdir.join("sweep.csv").strpath
    write_table(path, SWEEP_COLUMNS, [record.to_row() for record in records])

    parsed = read_records(path)
    assert [attr.evolve(r, wall_ms=None) for r in parsed] == [
        attr.evolve(r, wall_ms=None) for r in records
    ]
    assert all(record.version == VERSION for record in parsed)
    assert replay(parsed) == []


def test_replay_detects_mismatch(make_params):
    record = solve_point(make_params(gamma=0.6, j=1), "fock", cutoff=4)
    tampered = attr.evolve(record, energy=record.energy + 1e-6)
    mismatches = replay([record, tampered])
    assert len(mismatches) == 1
    assert mismatches[0][0] is tampered
    assert mismatches[0][1] == pytest.approx(record.energy, abs=1e-12)


def test_read_records_needs_version(tmpdir):
    path = tmpdir.join("plain.csv")
    path.write_text(",".join(SWEEP_COLUMNS) + "\n", "utf-8")
    with pytest.raises(InvalidParameters):
        read_records(path.strpath)


def test_read_table_skips_comments(tmpdir):
    path = tmpdir.join("t.csv").strpath
    write_table(path, ("a", "b"), [{"a": 1, "b": None}])
    version, rows = read_table(path)
    assert version == VERSION
    assert rows == [{"a": "1", "b": ""}]


def test_record_from_row_rejects_bad_basis():
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(omega="1.0", omega0="1.0", gamma="0.5", j="1.0", level="0")
    row.update(basis="both", converged="false")
    with pytest.raises(InvalidParameters):
        RunRecord.from_row(row)


def test_bound_rows(make_config, make_params):
    config = make_config(
        swept_parameter="gamma",
        grid=[0.5, 1.0],
        fixed=make_params(gamma=0.5, j=5),
    )
    normal, superradiant = bound_rows(config)
    assert tuple(normal) == BOUND_COLUMNS
    assert normal["flag"] == "normal-phase"
    assert normal["phase"] == "normal"
    assert normal["n_max_eq4"] is None
    assert normal["gamma_c"] == 0.5

    assert superradiant["phase"] == "superradiant"
    assert superradiant["flag"] == ""
    assert superradiant["n_max_eq4"] == pytest.approx(24.68, abs=0.01)
    scan = superradiant["n_max_scan"]
    assert superradiant["relative_difference"] == pytest.approx(
        (scan - superradiant["n_max_eq4"]) / superradiant["n_max_eq4"]
    )


def test_bound_rows_not_converged(make_config, make_params):
    config = make_config(
        swept_parameter="gamma",
        grid=[1.0],
        fixed=make_params(gamma=1.0, j=5),
        cutoff_limit=2,
    )
    (row,) = bound_rows(config)
    assert row["flag"] == "not-converged"
    assert row["n_max_scan"] is None
    assert row["relative_difference"] is None
    assert row["n_max_eq4"] is not None


def test_precision_rows():
    fit = PrecisionFit(
        slope=1.0,
        intercept=0.0,
        r_squared=1.0,
        samples=[(0, 1.0), (1, 2.0)],
        trajectory=[(0, 0.1), (1, 0.01), (2, 0.0)],
    )
    rows = precision_rows(fit)
    assert [row["used_in_fit"] for row in rows] == [True, True, False]
    assert rows[1]["minus_log10_delta_e"] == pytest.approx(2.0)
    assert rows[2]["minus_log10_delta_e"] is None
    text = format_table(PRECISION_COLUMNS, rows)
    assert text.splitlines()[-1] == "2,0.0,,false"


def test_bound_rows_with_workers(make_config, make_params, tmpdir):
    config = make_config(
        swept_parameter="gamma",
        grid=[0.4, 0.8, 1.0],
        fixed=make_params(gamma=0.4, j=2),
    )
    serial = bound_rows(config)
    parallel = bound_rows(attr.evolve(config, workers=2), log_dir=tmpdir.strpath)
    assert parallel == serial
    assert len(tmpdir.listdir()) == 3
    phases = [row["phase"] for row in serial]
    assert phases == ["normal", "superradiant", "superradiant"]


def test_bound_rows_ignore_basis_and_fixed_cutoff(make_config, make_params):
    config = make_config(
        swept_parameter="gamma",
        grid=[1.0],
        fixed=make_params(gamma=1.0, j=2),
        basis_kinds=["coherent"],
        cutoff=1,
    )
    (row,) = bound_rows(config)
    report = find_minimal_cutoff(make_params(gamma=1.0, j=2), "fock")
    assert row["n_max_scan"] == report.minimal_cutoff


def test_bound_rows_reject_cutoff_sweep(make_config, make_params):
    config = make_config(
        swept_parameter="cutoff", grid=[2], fixed=make_params(gamma=1.0, j=2)
    )
    with pytest.raises(InvalidParameters):
        bound_rows(config)


def test_read_records_with_custom_epsilon(make_config, make_params, tmpdir):
    fixed = make_params(gamma=0.7, j=1, epsilon=1e-9)
    config = make_config(swept_parameter="gamma", grid=[0.7], fixed=fixed)
    records = run_sweep(config)
    path = tmpdir.join("tight.csv").strpath
    write_table(path, SWEEP_COLUMNS, [record.to_row() for record in records])

    assert read_records(path)[0].params.epsilon == 1e-6
    (parsed,) = read_records(path, epsilon=1e-9)
    assert parsed.params == records[0].params
    assert parsed.converged is (parsed.delta_e < parsed.params.epsilon)
