import math

import numpy as np
import pytest

from tricoupler.design import (
    HALF_MAX_X,
    TOLERANCE_HEADER,
    DesignReport,
    EfficiencySpectrum,
    NoCrossingError,
    compare_case_bandwidths,
    find_intersection,
    fwhm,
    tolerance_csv,
    worker_count,
)
from tricoupler.spdc import designated_processes


def spectrum(grid, *curves, axis="signal_wavelength"):
    return EfficiencySpectrum(axis, np.asarray(grid), np.vstack(curves), tuple(range(len(curves))))


def test_spectrum_validates_shape():
    with pytest.raises(ValueError):
        spectrum([0, 1, 2], [1, 2])
    with pytest.raises(ValueError):
        spectrum([0, 2, 1], [1, 2, 3])


def test_spectrum_csv():
    s = spectrum([1250.0, 1251.0], [0.1, 1 / 3], [1.0, 0.5])
    text = s.to_csv()
    assert text.splitlines()[0] == "axis_value,process_1,process_2"
    assert text.splitlines()[1] == "1250,0.10000000000000001,1"
    assert float(text.splitlines()[2].split(",")[1]) == 1 / 3
    assert text.endswith("\n")


def test_crossing_of_offset_parabolas():
    x = np.linspace(0.0, 1.0, 51)
    a = 1 - 4 * (x - 0.43) ** 2
    b = 1 - 4 * (x - 0.61) ** 2
    cross = find_intersection(spectrum(x, a, b))
    assert abs(cross.location - 0.52) < 1e-3
    assert cross.spread < 1e-3


def test_identical_curves_are_degenerate():
    x = np.linspace(0, 1, 11)
    cross = find_intersection(spectrum(x, np.sin(x), np.sin(x)))
    assert cross.degenerate and cross.spread == 0.0


def test_disjoint_curves():
    x = np.linspace(0, 1, 101)
    a = np.where(x < 0.3, 1.0, 0.0)
    b = np.where(x > 0.7, 1.0, 0.0)
    with pytest.raises(NoCrossingError):
        find_intersection(spectrum(x, a, b))


def test_crossing_needs_two_curves():
    with pytest.raises(ValueError):
        find_intersection(spectrum([0, 1, 2], [1, 2, 3]))


def test_fwhm_of_sinc_squared_chain_rule():
    # sinc^2(s (lam - lam0) L / 2) with dk/dlam = s
    L, s, lam0 = 2550.0, 0.276e-3, 1350.0
    grid = np.linspace(1330, 1370, 4001)
    x = s * (grid - lam0) * L / 2
    curve = np.sinc(x / np.pi) ** 2
    assert fwhm(grid, curve) == pytest.approx(4 * HALF_MAX_X / (L * s), rel=1e-4)


def test_fwhm_undefined_off_grid():
    grid = np.linspace(0, 1, 11)
    assert fwhm(grid, np.ones(11)) is None


def test_bandwidth_ratio_identical():
    grid = np.linspace(-5, 5, 1001)
    s = spectrum(grid, np.exp(-grid**2))
    assert compare_case_bandwidths(s, s)["ratio"] == pytest.approx(1.0)


def test_tolerance_csv_header():
    assert tolerance_csv([]) == TOLERANCE_HEADER + "\n"


def test_report_period_relation():
    r = DesignReport(0, 0.9074, 1350.0, 0.01, 0.001)
    assert r.grating_period == pytest.approx(2 * math.pi / 0.9074)
    assert "grating_period_um = 6.92" in r.to_text()


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("QPM_THREADS", "1")
    assert worker_count() == 1


def test_design_grating_spread(designer):
    g = designer.design_grating(0)
    assert len(g.K_required) == 3
    assert g.grating_frequency == pytest.approx(np.mean(g.K_required))
    assert g.feasible
    assert g.grating_period == pytest.approx(2 * math.pi / g.grating_frequency)


def test_grating_sweep_peaks_at_K_required(designer):
    g = designer.design_grating(0)
    sweep = designer.sweep_grating(0)
    for j, K in enumerate(g.K_required):
        at_peak = sweep.evaluator(K)[j]
        assert at_peak >= sweep.per_process[j].max() - 1e-15


def test_grating_sweep_curves_share_shape(designer):
    g = designer.design_grating(0)
    sweep = designer.sweep_grating(0)
    offsets = np.linspace(-3e-3, 3e-3, 13)
    shapes = []
    for j, K in enumerate(g.K_required):
        peak = sweep.evaluator(K)[j]
        shapes.append([sweep.evaluator(K + o)[j] / peak for o in offsets])
    assert np.allclose(shapes[0], shapes[1], atol=1e-12)
    assert np.allclose(shapes[0], shapes[2], atol=1e-12)


def test_wavelength_sweep_peaks_where_dk_vanishes(designer, design_point):
    sweep = design_point["sweep_a"]
    K = design_point["K"]
    rows = designer.rows(0, sweep.grid)
    for j in range(3):
        dk = np.array([r.K_required[j] - K for r in rows])
        i = int(np.argmax(sweep.per_process[j]))
        # the zero of dk lies within one grid cell of the sampled maximum
        assert np.any(np.sign(dk[max(i - 1, 0):i + 2]) <= 0) and np.any(np.sign(dk[max(i - 1, 0):i + 2]) >= 0)


def test_halving_length_doubles_width(designer, design_point):
    K = design_point["K"]
    full = design_point["sweep_a"]
    half = designer.sweep_signal_wavelength(0, K, length_um=designer.geometry.length_um / 2)
    for a, b in zip(full.per_process, half.per_process):
        assert fwhm(half.grid, b) / fwhm(full.grid, a) == pytest.approx(2.0, rel=0.02)


def test_grid_refinement_stability(designer, design_point):
    fine = find_intersection(design_point["sweep_a"])
    coarse = find_intersection(designer.sweep_signal_wavelength(0, design_point["K"], n_points=101))
    assert abs(fine.location - coarse.location) < 0.5


def test_reciprocity(designer, design_point):
    cross = find_intersection(design_point["sweep_a"])
    grating = find_intersection(designer.sweep_grating(0, signal_nm=cross.location))
    assert abs(grating.location - design_point["K"]) < 2e-4


def test_tolerance_zero_shift(designer, design_point):
    (row,) = designer.grating_tolerance(0, [0.0], design_point["K"])
    assert row.shift_nm == 0.0 and row.pump_retune_nm == 0.0


def test_tolerance_monotone(designer, design_point):
    deltas = [-100.0, -50.0, -25.0, 0.0, 25.0, 50.0, 100.0]
    rows = {r.delta_period_nm: r for r in designer.grating_tolerance(0, deltas, design_point["K"])}
    for side in (1, -1):
        shifts = [abs(rows[side * d].shift_nm) for d in (0.0, 25.0, 50.0, 100.0)]
        assert all(np.diff(shifts) >= 0)
    for r in rows.values():
        assert r.pump_retune_nm == -r.shift_nm / 2


def test_sweep_error_names_wavelength(designer):
    from tricoupler.design import SweepError

    with pytest.raises(SweepError, match="nm"):
        designer.sweep_signal_wavelength(0, 0.9, start_nm=1000.0, stop_nm=1001.0, n_points=2)
