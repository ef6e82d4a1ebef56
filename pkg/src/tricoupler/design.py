"""Single-grating design of the coupler source: spectra, crossings and tolerances.

Every sweep point reduces to three numbers per channel, the grating
frequency it needs, its overlap and its index product. Those rows depend only
on the signal wavelength, so they are cached and any grating value can be
re-evaluated without touching the mode solver again.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .material import MaterialModel, Polarization
from .modesolver import CouplerGeometry, solve_channel_modes
from .spdc import (
    ProcessSpec,
    designated_processes,
    enumerate_processes,
    overlap_integral,
    qpm_frequency,
    sinc,
    solve_mode_set,
)

SWEEP_WAVELENGTH_NM = (1250.0, 1450.0, 201)
SWEEP_GRATING = (0.89, 0.92, 301)
SPREAD_LIMIT = 0.02
CROSSING_FLOOR = 0.05  # ignore grid points where every curve is below this fraction of the peak
HALF_MAX_X = 1.39155737825151  # sinc(x)^2 = 1/2


class DesignError(RuntimeError):
    pass


class NoCrossingError(DesignError):
    pass


class SweepError(DesignError):
    pass


def worker_count():
    """Parallel workers for sweeps, capped by QPM_THREADS."""
    env = os.environ.get("QPM_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, int(env))
        except ValueError:
            raise DesignError(f"QPM_THREADS must be an integer, got {env!r}") from None
    return max(n, 1)


class ModeCache:
    """Channel modes keyed by (wavelength, polarization, count, exact); entries are idempotent."""

    def __init__(self, material: MaterialModel, geometry: CouplerGeometry, verify=True):
        self.material = material
        self.geometry = geometry
        self.verify = verify
        self._store = {}

    def __call__(self, wavelength, pol, n_modes, exact):
        key = (float(wavelength), pol, n_modes, exact)
        if key not in self._store:
            self._store[key] = tuple(solve_channel_modes(self.material, self.geometry, wavelength, pol,
                                                         n_modes, exact, self.verify))
        return self._store[key]

    def __len__(self):
        return len(self._store)


@dataclass(frozen=True)
class ProcessRows:
    """Per-channel K_required, overlap and n_s*n_i at one signal wavelength."""

    signal_wavelength: float
    K_required: np.ndarray
    overlap: np.ndarray
    n_product: np.ndarray


def _process_rows(material, geometry, pump_wavelength, signal_wavelength, specs, cache=None):
    modes = solve_mode_set(material, geometry, pump_wavelength, signal_wavelength, cache)
    K = [qpm_frequency(s, modes) for s in specs]
    I = [overlap_integral(s, modes) for s in specs]
    N = []
    for s in specs:
        _, sig, idl = modes.triple(s)
        N.append(sig.n_eff * idl.n_eff)
    return ProcessRows(signal_wavelength, np.array(K), np.array(I), np.array(N))


def _rows_job(args):
    material, geometry, pump_wavelength, lam, specs = args
    try:
        return _process_rows(material, geometry, pump_wavelength, lam, specs)
    except Exception as err:  # re-raised in the parent with the wavelength attached
        return err


def channel_efficiency(rows: ProcessRows, grating_K, length_um):
    """Unnormalized |I sinc(dk L/2) / N|^2 per channel."""
    x = (rows.K_required - grating_K) * length_um / 2
    return (rows.overlap * sinc(x) / rows.n_product) ** 2


@dataclass(frozen=True, eq=False)
class EfficiencySpectrum:
    axis: str  # "signal_wavelength" (nm) or "grating_frequency" (um^-1)
    grid: np.ndarray
    per_process: np.ndarray  # shape (n_processes, n_points), normalized to the global max
    processes: tuple
    scale: float = 1.0  # the global max removed by normalization
    evaluator: object = field(default=None, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        eff = np.atleast_2d(np.asarray(self.per_process, dtype=float))
        if eff.shape[1] != grid.size:
            raise ValueError("every process curve needs one value per grid point")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "per_process", eff)

    @property
    def labels(self):
        return [p.label if isinstance(p, ProcessSpec) else str(p) for p in self.processes]

    def to_csv(self) -> str:
        header = "axis_value," + ",".join(f"process_{j + 1}" for j in range(len(self.processes)))
        lines = [header]
        for i, x in enumerate(self.grid):
            lines.append(",".join(f"{v:.17g}" for v in (x, *self.per_process[:, i])))
        return "\n".join(lines) + "\n"


def relative_spread(values, axis=0):
    values = np.asarray(values, dtype=float)
    top = values.max(axis=axis)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(top > 0, (top - values.min(axis=axis)) / top, 1.0)


@dataclass(frozen=True)
class Crossing:
    location: float
    spread: float
    efficiencies: tuple
    degenerate: bool = False


def find_intersection(spectrum: EfficiencySpectrum, floor=CROSSING_FLOOR, refine=True) -> Crossing:
    """Point of smallest relative spread (max - min) / max among the curves.

    Grid points where every curve is below ``floor`` are ignored so the
    near-zero wings cannot pose as crossings. The grid minimum is refined
    on the neighbouring cells, using the spectrum's evaluator when it has
    one and cubic interpolation of the samples otherwise.
    """
    eff = spectrum.per_process
    if eff.shape[0] < 2:
        raise ValueError("a crossing needs at least two curves")
    grid = spectrum.grid
    if np.all(np.ptp(eff, axis=0) == 0):
        i = int(np.argmax(eff[0]))
        return Crossing(float(grid[i]), 0.0, tuple(eff[:, i]), degenerate=True)
    spread = relative_spread(eff)
    spread = np.where(eff.max(axis=0) >= floor, spread, np.inf)
    i = int(np.argmin(spread))
    if not spread[i] < 1.0:
        raise NoCrossingError(f"curves never overlap on [{grid[0]}, {grid[-1]}]")
    best = Crossing(float(grid[i]), float(spread[i]), tuple(eff[:, i]))
    if not refine or grid.size < 3:
        return best
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if spectrum.evaluator is not None:
        curves = lambda x: np.asarray(spectrum.evaluator(x))
    else:
        splines = [CubicSpline(grid, row) for row in eff]
        curves = lambda x: np.array([s(x) for s in splines])
    res = minimize_scalar(lambda x: float(relative_spread(curves(x))), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6 * (grid[-1] - grid[0])})
    if res.fun <= best.spread:
        best = Crossing(float(res.x), float(res.fun), tuple(float(v) for v in curves(res.x)))
    return best


def fwhm(grid, curve):
    """Full width at half maximum of the main lobe, or None if it leaves the grid."""
    grid = np.asarray(grid, dtype=float)
    curve = np.asarray(curve, dtype=float)
    i = int(np.argmax(curve))
    half = curve[i] / 2
    if half <= 0:
        return None
    left = i
    while left > 0 and curve[left] > half:
        left -= 1
    right = i
    while right < curve.size - 1 and curve[right] > half:
        right += 1
    if curve[left] > half or curve[right] > half:
        return None
    interp = lambda j: grid[j] + (half - curve[j]) * (grid[j + 1] - grid[j]) / (curve[j + 1] - curve[j])
    return float(interp(right - 1) - interp(left))


def compare_case_bandwidths(spectrum_a: EfficiencySpectrum, spectrum_b: EfficiencySpectrum):
    """FWHM of every curve and the ratio min(case B) / max(case A)."""
    widths_a = [fwhm(spectrum_a.grid, c) for c in spectrum_a.per_process]
    widths_b = [fwhm(spectrum_b.grid, c) for c in spectrum_b.per_process]
    known_a = [w for w in widths_a if w is not None]
    known_b = [w for w in widths_b if w is not None]
    ratio = min(known_b) / max(known_a) if known_a and known_b else None
    return {"widths_a": widths_a, "widths_b": widths_b, "ratio": ratio}


@dataclass(frozen=True)
class GratingDesign:
    grating_frequency: float
    spread: float
    K_required: tuple
    feasible: bool

    @property
    def grating_period(self):
        return 2 * math.pi / self.grating_frequency


@dataclass(frozen=True)
class ToleranceRow:
    delta_period_nm: float
    crossing_nm: float
    shift_nm: float
    pump_retune_nm: float
    note: str = ""


TOLERANCE_HEADER = "delta_lambda_nm,crossing_nm,shift_nm,pump_retune_nm"


def tolerance_csv(rows) -> str:
    lines = [TOLERANCE_HEADER]
    for r in rows:
        lines.append(",".join(f"{v:.17g}" for v in (r.delta_period_nm, r.crossing_nm, r.shift_nm,
                                                    r.pump_retune_nm)))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DesignReport:
    pump_mode: int
    grating_frequency: float
    crossing_wavelength: float
    crossing_spread: float
    spread_at_degeneracy: float
    tolerance_table: tuple = ()

    @property
    def grating_period(self):
        return 2 * math.pi / self.grating_frequency

    def to_text(self) -> str:
        items = [
            ("pump_mode", self.pump_mode),
            ("grating_frequency_per_um", f"{self.grating_frequency:.17g}"),
            ("grating_period_um", f"{self.grating_period:.17g}"),
            ("degenerate_K_spread_relative", f"{self.spread_at_degeneracy:.17g}"),
            ("crossing_wavelength_nm", f"{self.crossing_wavelength:.17g}"),
            ("crossing_spread", f"{self.crossing_spread:.17g}"),
        ]
        return "".join(f"{k} = {v}\n" for k, v in items)


class CouplerDesign:
    """Design studies at a fixed material, geometry and pump wavelength."""

    def __init__(self, material: MaterialModel, geometry: CouplerGeometry, pump_wavelength=0.675,
                 workers=None):
        self.material = material
        self.geometry = geometry
        self.pump_wavelength = pump_wavelength
        self.workers = worker_count() if workers is None else workers
        self.modes = ModeCache(material, geometry)
        self._rows = {}

    @property
    def degenerate_nm(self):
        return 2e3 * self.pump_wavelength

    def processes(self, pump_mode, include_crosstalk=False):
        return tuple(enumerate_processes(pump_mode) if include_crosstalk else designated_processes(pump_mode))

    def rows(self, pump_mode, signal_nm, include_crosstalk=False):
        """ProcessRows at each signal wavelength (nm), solving only the uncached ones."""
        specs = self.processes(pump_mode, include_crosstalk)
        key = lambda lam: (pump_mode, include_crosstalk, float(lam))
        todo = sorted({float(x) for x in signal_nm if key(x) not in self._rows})
        if todo:
            jobs = [(self.material, self.geometry, self.pump_wavelength, x * 1e-3, specs) for x in todo]
            if self.workers > 1 and len(todo) > 1:
                with ProcessPoolExecutor(max_workers=min(self.workers, len(todo))) as pool:
                    results = list(pool.map(_rows_job, jobs, chunksize=max(1, len(todo) // (4 * self.workers))))
            else:
                results = []
                for job in jobs:
                    try:
                        results.append(_process_rows(*job, cache=self.modes))
                    except Exception as err:
                        results.append(err)
                        break
            for lam, res in zip(todo, results):
                if isinstance(res, Exception):
                    raise SweepError(f"mode solve failed at signal {lam} nm: {res}") from res
                self._rows[key(lam)] = res
        return [self._rows[key(x)] for x in signal_nm]

    def design_grating(self, pump_mode=0, spread_limit=SPREAD_LIMIT) -> GratingDesign:
        (rows,) = self.rows(pump_mode, [self.degenerate_nm])
        K = rows.K_required
        mean = float(np.mean(K))
        spread = float(np.ptp(K) / abs(mean)) if mean else 0.0
        return GratingDesign(mean, spread, tuple(float(k) for k in K), spread <= spread_limit)

    def sweep_signal_wavelength(self, pump_mode, grating_K, start_nm=SWEEP_WAVELENGTH_NM[0],
                                stop_nm=SWEEP_WAVELENGTH_NM[1], n_points=SWEEP_WAVELENGTH_NM[2],
                                include_crosstalk=False, length_um=None) -> EfficiencySpectrum:
        if n_points < 2:
            raise ValueError("a sweep needs at least two points")
        grid = np.linspace(start_nm, stop_nm, n_points)
        rows = self.rows(pump_mode, grid, include_crosstalk)
        L = self.geometry.length_um if length_um is None else length_um
        raw = np.array([channel_efficiency(r, grating_K, L) for r in rows]).T
        peak = float(raw.max())
        if not peak > 0:
            raise SweepError("every channel vanishes across the sweep")

        def evaluator(lam_nm):
            (r,) = self.rows(pump_mode, [lam_nm], include_crosstalk)
            return channel_efficiency(r, grating_K, L) / peak

        return EfficiencySpectrum("signal_wavelength", grid, raw / peak,
                                  self.processes(pump_mode, include_crosstalk), peak, evaluator)

    def sweep_grating(self, pump_mode, start=SWEEP_GRATING[0], stop=SWEEP_GRATING[1], n_points=SWEEP_GRATING[2],
                      signal_nm=None, include_crosstalk=False, length_um=None) -> EfficiencySpectrum:
        if n_points < 2:
            raise ValueError("a sweep needs at least two points")
        signal_nm = self.degenerate_nm if signal_nm is None else signal_nm
        (rows,) = self.rows(pump_mode, [signal_nm], include_crosstalk)
        L = self.geometry.length_um if length_um is None else length_um
        grid = np.linspace(start, stop, n_points)
        raw = np.array([channel_efficiency(rows, K, L) for K in grid]).T
        peak = float(raw.max())
        if not peak > 0:
            raise SweepError("every channel vanishes across the sweep")
        evaluator = lambda K: channel_efficiency(rows, K, L) / peak
        return EfficiencySpectrum("grating_frequency", grid, raw / peak,
                                  self.processes(pump_mode, include_crosstalk), peak, evaluator)

    def crossing(self, pump_mode, grating_K, **sweep):
        return find_intersection(self.sweep_signal_wavelength(pump_mode, grating_K, **sweep))

    def grating_tolerance(self, pump_mode, deltas_nm, grating_K=None, **sweep):
        """Crossing shift and compensating pump retune for each grating-period error (nm)."""
        if grating_K is None:
            grating_K = self.design_grating(pump_mode).grating_frequency
        period = 2 * math.pi / grating_K
        base = self.crossing(pump_mode, grating_K, **sweep).location
        table = []
        for dp in deltas_nm:
            K = 2 * math.pi / (period + dp * 1e-3)
            try:
                where = self.crossing(pump_mode, K, **sweep).location
            except NoCrossingError as err:
                table.append(ToleranceRow(float(dp), math.nan, math.nan, math.nan, str(err)))
                continue
            shift = where - base
            table.append(ToleranceRow(float(dp), where, shift, -shift / 2))
        return table

    def report(self, pump_mode=0, deltas_nm=(-50.0, 0.0, 50.0), **sweep) -> DesignReport:
        grating = self.design_grating(pump_mode)
        cross = self.crossing(pump_mode, grating.grating_frequency, **sweep)
        table = self.grating_tolerance(pump_mode, deltas_nm, grating.grating_frequency, **sweep) if deltas_nm else ()
        return DesignReport(pump_mode, grating.grating_frequency, cross.location, cross.spread,
                            grating.spread, tuple(table))


def design_grating(pump_mode, geometry, material, pump_wavelength, spread_limit=SPREAD_LIMIT) -> GratingDesign:
    return CouplerDesign(material, geometry, pump_wavelength, workers=1).design_grating(pump_mode, spread_limit)
