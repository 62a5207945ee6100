#!/usr/bin/env python3
"""Rebuild the end-model metrics from their Toda profiles and verify them.

For each profile: solve for the connection 1-form by quadrature, assemble
the 4-metric, and report the Ricci norm, the deviation from the catalog
closed form, and the reduced-level integral coefficients.

Usage: python scripts/toda_rebuild.py
"""

import numpy as np

from instanton import catalog, geometry, toda


def main() -> None:
    levels = [-40.0, -30.0, -20.0, -10.0, -5.0, -3.0]
    for name in ("kasner", "alh_star"):
        field = toda.toda_solution(name)
        ref = catalog.make_metric(name)
        # connection form found by quadrature (fixed only up to gauge):
        # must still give a Ricci-flat metric
        data = toda.ansatz_from_toda(field)
        built = toda.build_metric(data, orientation=ref.orientation)
        pts = geometry.sample_points(built, 40, seed=0)
        ric = geometry.ricci_frame_norm(built, pts).max()
        # the catalog closed form uses a specific gauge; compare in it
        named = toda.build_metric(toda.named_ansatz(name),
                                  orientation=ref.orientation)
        g_b, _, _ = geometry.metric_arrays(named, pts, order=0)
        g_r, _, _ = geometry.metric_arrays(ref, pts, order=0)
        dev = (np.abs(g_b - g_r) / (1.0 + np.abs(g_r))).max()
        ri = toda.reduction_integrals(field, levels)
        print(f"{name}: |Ric| = {ric:.2e}, catalog deviation = {dev:.2e}, "
              f"(a, b) = ({ri.a:+.6f}, {ri.b:+.6f})")
    st = toda.schwarzschild_toda(1.0)
    pts = toda.sample_field(st, 200, seed=0)
    res = np.abs(toda.toda_residual(st, pts)).max()
    print(f"schwarzschild reduced form: Toda residual = {res:.2e}")


if __name__ == "__main__":
    main()
