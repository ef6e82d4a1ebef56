"""Lithium niobate refractive indices for the step-index channel guides.

Substrate indices come from a three-term Sellmeier law

    n^2 - 1 = sum_k A_k lam^2 / (lam^2 - B_k)        (lam in um, B_k in um^2)

and the guide core is the substrate plus a wavelength-independent contrast
per polarization. The default coefficients are the congruent LiNbO3 fits of
Zelmon, Small & Jundt, JOSA B 14, 3319 (1997), measured at room temperature.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

WAVELENGTH_WINDOW = (0.4, 2.0)

# Zelmon et al. (1997), congruent LiNbO3, flattened as A1, B1, A2, B2, A3, B3.
ZELMON_CONGRUENT_O = (2.6734, 0.01764, 1.2290, 0.05914, 12.614, 474.60)
ZELMON_CONGRUENT_E = (2.9804, 0.02047, 0.5981, 0.0666, 8.9543, 416.08)
# Same reference, 5 mol.% MgO-doped LiNbO3.
ZELMON_MGO_O = (2.4272, 0.01478, 1.4617, 0.05612, 9.6536, 371.216)
ZELMON_MGO_E = (2.2454, 0.01242, 1.3005, 0.05313, 6.8972, 331.33)

SELLMEIER_SETS = {
    "congruent": (ZELMON_CONGRUENT_O, ZELMON_CONGRUENT_E),
    "mgo": (ZELMON_MGO_O, ZELMON_MGO_E),
}


class OutOfRangeError(ValueError):
    """Wavelength outside the window where the dispersion law is trusted."""


class CalibrationError(RuntimeError):
    def __init__(self, message, best_residual=None, best_contrast=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best_contrast = best_contrast


class Polarization(enum.Enum):
    """H is the ordinary wave (field along y), V the extraordinary (field along z)."""

    H = "H"
    V = "V"


@dataclass(frozen=True)
class MaterialModel:
    sellmeier_ordinary: tuple = ZELMON_CONGRUENT_O
    sellmeier_extraordinary: tuple = ZELMON_CONGRUENT_E
    delta_n_H: float = 0.003
    delta_n_V: float = 0.003
    d24: float = 1.0

    def __post_init__(self):
        for name in ("sellmeier_ordinary", "sellmeier_extraordinary"):
            coeffs = tuple(float(c) for c in getattr(self, name))
            if len(coeffs) == 0 or len(coeffs) % 2:
                raise ValueError(f"{name} needs (A, B) pairs, got {len(coeffs)} numbers")
            object.__setattr__(self, name, coeffs)
        for name in ("delta_n_H", "delta_n_V"):
            value = getattr(self, name)
            if not 0.0 <= value < 0.1:
                raise ValueError(f"{name}={value} outside [0, 0.1)")

    def contrast(self, pol: Polarization) -> float:
        return self.delta_n_H if pol is Polarization.H else self.delta_n_V

    def with_contrast(self, delta_n_H: float, delta_n_V: float) -> "MaterialModel":
        return replace(self, delta_n_H=float(delta_n_H), delta_n_V=float(delta_n_V))


def sellmeier(wavelength, coeffs):
    """Evaluate the Sellmeier law; accepts scalars or arrays (um)."""
    lam2 = np.asarray(wavelength, dtype=float) ** 2
    n2 = 1.0
    for a, b in zip(coeffs[0::2], coeffs[1::2]):
        n2 = n2 + a * lam2 / (lam2 - b)
    return np.sqrt(n2)


def _check_window(wavelength):
    lo, hi = WAVELENGTH_WINDOW
    w = np.asarray(wavelength, dtype=float)
    if np.any(~((w > lo) & (w < hi))):
        raise OutOfRangeError(
            f"wavelength {wavelength} um outside the validity window ({lo}, {hi}) um"
        )


def substrate_index(model: MaterialModel, wavelength, pol: Polarization):
    _check_window(wavelength)
    coeffs = model.sellmeier_ordinary if pol is Polarization.H else model.sellmeier_extraordinary
    n = sellmeier(wavelength, coeffs)
    return float(n) if np.ndim(n) == 0 else n


def core_index(model: MaterialModel, wavelength, pol: Polarization):
    return substrate_index(model, wavelength, pol) + model.contrast(pol)


CONTRAST_BOUNDS = (1e-4, 0.0999)


def calibrate_contrast(model: MaterialModel, geometry, target_K: float, pump_wavelength: float,
                       pump_mode: int = 0, bounds=CONTRAST_BOUNDS, tol: float = 1e-4,
                       spread_weight: float = 1e-2, delta_n_V=None):
    """Pin (delta_n_H, delta_n_V) so the degenerate mean QPM frequency hits ``target_K``.

    Contrast only changes the mode count of its own polarization, so the
    admissible region (three guided signal/idler supermodes) is a rectangle
    whose edges are found by bisection on the mode count. Inside it the
    squared mismatch of the mean K plus ``spread_weight`` times the squared K
    spread is minimized over both contrasts; when the target is reachable the
    H contrast is then polished so the mean hits it exactly.

    Passing ``delta_n_V`` freezes the V contrast and solves for H alone.
    Raises CalibrationError with the best residual when no admissible pair
    reaches the target within ``tol`` (um^-1).
    """
    from scipy.optimize import brentq, minimize

    from .spdc import degenerate_qpm_frequencies

    if not target_K > 0:
        raise ValueError("target_K must be positive")
    h_span = admissible_contrast(model, geometry, pump_wavelength, Polarization.H, bounds)
    v_span = admissible_contrast(model, geometry, pump_wavelength, Polarization.V, bounds)
    if h_span is None or v_span is None:
        raise CalibrationError(f"no contrast in {bounds} gives three guided signal/idler modes",
                               best_residual=math.inf)
    if delta_n_V is not None:
        if not v_span[0] <= delta_n_V <= v_span[1]:
            raise CalibrationError(f"delta_n_V={delta_n_V} outside admissible range {v_span}",
                                   best_residual=math.inf)
        v_span = (delta_n_V, delta_n_V)

    def k_values(h, v):
        return degenerate_qpm_frequencies(model.with_contrast(h, v), geometry, pump_wavelength,
                                          pump_mode, verify=False)

    def mismatch(h, v):
        return float(np.mean(k_values(h, v))) - target_K

    # work in units of 1e-3 so the optimizer sees O(1) variables
    box = [(h_span[0] * 1e3, h_span[1] * 1e3), (v_span[0] * 1e3, v_span[1] * 1e3)]

    def objective(x):
        ks = k_values(x[0] * 1e-3, x[1] * 1e-3)
        return (np.mean(ks) - target_K) ** 2 + spread_weight * np.ptp(ks) ** 2

    centre = [0.5 * (lo + hi) for lo, hi in box]
    best = minimize(objective, centre, method="L-BFGS-B", bounds=box,
                    options={"ftol": 1e-20, "gtol": 1e-14, "eps": 1e-7})
    corners = [np.array([hx, vx]) for hx in box[0] for vx in box[1]]
    for c in corners:
        if objective(c) < best.fun:
            best = minimize(objective, c, method="L-BFGS-B", bounds=box,
                            options={"ftol": 1e-20, "gtol": 1e-14, "eps": 1e-7})
    h, v = best.x * 1e-3
    v = float(np.clip(v, *v_span))
    lo_m, hi_m = mismatch(h_span[0], v), mismatch(h_span[1], v)
    if lo_m * hi_m <= 0:
        h = brentq(lambda t: mismatch(t, v), h_span[0], h_span[1], xtol=1e-14, rtol=1e-14)
    residual = abs(mismatch(h, v))
    if residual > tol:
        raise CalibrationError(
            f"no admissible contrast reaches K={target_K} um^-1: best residual {residual:.3g} um^-1 "
            f"at delta_n_H={h:.6g}, delta_n_V={v:.6g}",
            best_residual=residual, best_contrast=(float(h), float(v)))
    return float(h), float(v)


def admissible_contrast(model: MaterialModel, geometry, pump_wavelength, pol: Polarization,
                        bounds=CONTRAST_BOUNDS, xtol=1e-9):
    """Contrast interval over which ``pol`` carries exactly three guided modes at degeneracy.

    Returns (lo, hi) or None. The H check also requires the two lowest pump
    supermodes.
    """
    from .modesolver import CompositionError, ModeCountError, NoModeError, solve_channel_modes

    lam = 2 * pump_wavelength

    def state(dn):
        """-1: too few modes, 0: exactly three, +1: too many."""
        trial = model.with_contrast(dn, dn)
        try:
            solve_channel_modes(trial, geometry, lam, pol, 3, exact=True, verify=False)
            if pol is Polarization.H:
                solve_channel_modes(trial, geometry, pump_wavelength, pol, 2, exact=False, verify=False)
        except ModeCountError as err:
            return 1 if err.count > 3 else -1
        except (NoModeError, CompositionError):
            return -1
        return 0

    grid = np.geomspace(bounds[0], bounds[1], 80)
    states = [state(x) for x in grid]
    inside = [i for i, s in enumerate(states) if s == 0]
    if not inside:
        # the window may be narrower than the grid spacing
        for i in range(len(grid) - 1):
            if states[i] < 0 < states[i + 1]:
                probe = np.linspace(grid[i], grid[i + 1], 200)
                fine = [state(x) for x in probe]
                inside_fine = [x for x, s in zip(probe, fine) if s == 0]
                if inside_fine:
                    return _edges(state, inside_fine[0], inside_fine[-1], grid[i], grid[i + 1], xtol)
        return None
    i0, i1 = inside[0], inside[-1]
    outer_lo = grid[i0 - 1] if i0 > 0 else grid[i0]
    outer_hi = grid[i1 + 1] if i1 + 1 < len(grid) else grid[i1]
    return _edges(state, grid[i0], grid[i1], outer_lo, outer_hi, xtol)


def _edges(state, in_lo, in_hi, out_lo, out_hi, xtol):
    def bisect(good, bad):
        while abs(bad - good) > xtol:
            mid = 0.5 * (good + bad)
            if state(mid) == 0:
                good = mid
            else:
                bad = mid
        return good

    lo = bisect(in_lo, out_lo) if state(out_lo) != 0 else out_lo
    hi = bisect(in_hi, out_hi) if state(out_hi) != 0 else out_hi
    return float(lo), float(hi)
