"""
Parameter studies of the truncation behaviour across phases. They take minutes;
run them with `pytest --runslow`.
"""

import itertools

import pytest

from dicke_spectra.convergence import (
    analytic_nmax_bound,
    find_minimal_cutoff,
    precision_scan,
)
from dicke_spectra.sweep import SWEEP_COLUMNS, SweepConfig, format_table, run_sweep

pytestmark = pytest.mark.slow


@pytest.mark.parametrize(
    "gamma,j", itertools.product((0.2, 0.5, 0.8, 1.0), (1, 5, 10))
)
def test_bases_agree_at_convergence(make_params, gamma, j):
    # a single small coherent ΔE can be an odd/even dip, see
    # test_coherent_delta_e_alternates
    params = make_params(gamma=gamma, j=j)
    fock = find_minimal_cutoff(params, "fock", window=2)
    coherent = find_minimal_cutoff(params, "coherent", window=2)
    assert fock.converged and coherent.converged
    assert abs(fock.energy_at_min - coherent.energy_at_min) < 2 * params.epsilon


@pytest.mark.parametrize("j", (5, 10))
def test_scan_tracks_analytic_estimate(make_params, j):
    scanned = []
    for gamma in (0.6, 0.8, 1.0, 1.2):
        params = make_params(gamma=gamma, j=j)
        report = find_minimal_cutoff(params, "fock")
        estimate = analytic_nmax_bound(params)
        assert report.converged
        # the estimate undershoots the scan, by up to 60% close to γc
        assert report.minimal_cutoff >= estimate
        if gamma >= 1.0:
            assert (report.minimal_cutoff - estimate) / estimate <= 0.25
        scanned.append(report.minimal_cutoff)
    assert scanned == sorted(scanned)


def test_coherent_advantage_grows_with_atoms(make_params):
    coherent_cutoffs = []
    for j in (5, 10, 15, 20):
        params = make_params(gamma=1.0, j=j)
        fock = find_minimal_cutoff(params, "fock")
        coherent = find_minimal_cutoff(params, "coherent")
        assert coherent.minimal_cutoff < fock.minimal_cutoff
        coherent_cutoffs.append(coherent.minimal_cutoff)
    assert coherent_cutoffs == sorted(coherent_cutoffs, reverse=True)


@pytest.mark.parametrize("j", (10, 20))
def test_crossing_out_of_resonance(make_params, j):
    gamma = 0.5
    grid = [round(0.1 * k, 12) for k in range(1, 21)]
    pairs = []
    for omega0 in grid:
        params = make_params(gamma=gamma, j=j, omega0=omega0)
        fock = find_minimal_cutoff(params, "fock")
        coherent = find_minimal_cutoff(params, "coherent")
        pairs.append((omega0, fock.minimal_cutoff, coherent.minimal_cutoff))

    crossing = next(i for i, (_, fock, coherent) in enumerate(pairs) if fock < coherent)
    assert all(coherent <= fock for _, fock, coherent in pairs[:crossing])
    # the normal region is ω0 > 4ωγ²
    assert pairs[crossing][0] > 4 * gamma**2


def test_coherent_precision_fit(make_params):
    params = make_params(gamma=0.5, j=40)
    fit = precision_scan(params, "coherent", range(0, 17), index_by="upper")
    assert fit.slope == pytest.approx(0.732, abs=0.05)
    assert fit.intercept == pytest.approx(0.278, abs=0.10)


def test_sweeps_are_byte_identical(make_params):
    config = SweepConfig(
        swept_parameter="gamma",
        grid=[0.2, 0.5, 0.8, 1.0],
        fixed=make_params(gamma=0.2, j=5),
        basis_kinds=["fock", "coherent"],
    )
    bodies = [
        format_table(SWEEP_COLUMNS, [r.to_row() for r in run_sweep(config)])
        for _ in range(2)
    ]
    assert bodies[0] == bodies[1]
