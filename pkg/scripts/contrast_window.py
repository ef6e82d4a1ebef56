#!/usr/bin/env python3
"""Reachable degenerate grating frequencies for each embedded Sellmeier set.

For every set, finds the contrast interval that keeps exactly three guided
signal/idler supermodes, evaluates the mean and spread of the case-A K at the
corners of that box and runs the calibration against --target.

    python scripts/contrast_window.py --target 0.9074
"""

import argparse
import itertools

import numpy as np

from tricoupler.material import SELLMEIER_SETS, CalibrationError, MaterialModel, Polarization, \
    admissible_contrast, calibrate_contrast
from tricoupler.modesolver import CouplerGeometry
from tricoupler.spdc import degenerate_qpm_frequencies


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--target", type=float, default=0.9074)
    parser.add_argument("--pump-nm", type=float, default=675.0)
    parser.add_argument("--cover", type=float, default=1.0)
    args = parser.parse_args()

    lam_p = args.pump_nm * 1e-3
    geometry = CouplerGeometry(cover_index=args.cover)
    for name, (o, e) in SELLMEIER_SETS.items():
        model = MaterialModel(o, e)
        h = admissible_contrast(model, geometry, lam_p, Polarization.H)
        v = admissible_contrast(model, geometry, lam_p, Polarization.V)
        print(f"[{name}] three-mode window: dn_H in ({h[0]:.5f}, {h[1]:.5f}), dn_V in ({v[0]:.5f}, {v[1]:.5f})")
        for dh, dv in itertools.product(h, v):
            ks = degenerate_qpm_frequencies(model.with_contrast(dh, dv), geometry, lam_p, verify=False)
            print(f"  dn_H {dh:.5f} dn_V {dv:.5f}: mean K {np.mean(ks):.5f} um^-1, spread {np.ptp(ks):.2e}")
        try:
            dh, dv = calibrate_contrast(model, geometry, args.target, lam_p)
            print(f"  calibrated to {args.target}: dn_H {dh:.6f}, dn_V {dv:.6f}")
        except CalibrationError as err:
            print(f"  calibration to {args.target} failed: best residual {err.best_residual:.5f} um^-1")


if __name__ == "__main__":
    main()
