"""Reference results for the registered problems.

Each entry is ``(iters, n_f, f, v, kkt, final_rho)``. ``DEFAULT``,
``BETA_PHI_05`` and ``BETA_PHI_099`` are feasible runs (default parameters,
``beta_phi=0.5`` and ``beta_phi=0.99``); ``INFEASIBLE`` lists the ``_inf``
variants under default parameters.
"""

from __future__ import annotations

from typing import NamedTuple


class ReferenceRow(NamedTuple):
    iters: int
    n_f: int
    f: float
    v: float
    kkt: float
    rho: float


def _rows(raw: dict) -> dict[str, ReferenceRow]:
    return {k: ReferenceRow(*v) for k, v in raw.items()}


DEFAULT = _rows({
    "hs11": (8, 9, -8.498465, 1.225127e-07, 1.349376e-06, 0.218726),
    "hs14": (20, 89, 1.393453, 7.451143e-06, 4.922505e-06, 0.414328),
    "hs21": (2, 3, -99.96, 4.440892e-16, 4.9995e-09, 1.0),
    "hs28": (2, 3, 1.117108e-13, 0.0, 2.034355e-07, 1.0),
    "hs32": (12, 13, 1.00088, 1.018075e-13, 9.627754e-05, 0.109419),
    "hs35": (1, 2, 0.1111111, 0.0, 8.332954e-05, 1.0),
    "hs41": (12, 85, 1.925925, 8.483081e-06, 1.021823e-06, 0.440257),
    "hs43": (15, 17, -43.9999, 1.315519e-08, 3.235023e-05, 0.324783),
    "hs48": (8, 9, 2.516051e-19, 5.230553e-06, 1.162349e-09, 1.0),
    "hs51": (2, 3, 6.496671e-17, 1.204511e-08, 9.999249e-09, 1.0),
    "hs52": (22, 23, 5.326608, 6.900875e-06, 3.165318e-06, 0.101755),
    "hs61": (13, 47, -143.6461, 1.588448e-06, 4.77574e-07, 0.338698),
    "hs76": (8, 476, -4.681819, 5.280851e-07, 9.252311e-05, 0.38742),
    "hs100": (11, 22, 680.6301, 2.403271e-06, 8.021402e-06, 0.540664),
    "hs113": (16, 17, 24.30625, 1.363357e-06, 9.915806e-06, 0.38742),
})

BETA_PHI_05 = _rows({
    "hs11": (10, 11, -8.498464, 1.123963e-08, 1.512764e-07, 0.251157),
    "hs14": (23, 119, 1.393453, 7.451723e-06, 5.102185e-06, 0.429421),
    "hs21": (2, 3, -99.96, 4.440892e-16, 4.9995e-09, 1.0),
    "hs28": (2, 3, 1.117108e-13, 0.0, 2.034355e-07, 1.0),
    "hs32": (15, 16, 1.001279, 5.218048e-15, 9.183154e-05, 0.07179),
    "hs35": (1, 2, 0.1111111, 0.0, 8.332954e-05, 1.0),
    "hs41": (17, 86, 1.925925, 6.326517e-06, 1.242304e-06, 0.516082),
    "hs43": (15, 17, -43.99977, 5.769252e-10, 7.534945e-05, 0.32581),
    "hs48": (9, 10, 2.756164e-20, 4.143635e-06, 4.604039e-10, 1.0),
    "hs51": (2, 3, 5.165478e-17, 4.610553e-09, 9.999748e-09, 1.0),
    "hs52": (27, 28, 5.326601, 8.035451e-06, 4.26017e-06, 0.113117),
    "hs61": (17, 110, -143.6461, 5.755363e-06, 2.279362e-06, 0.446153),
    "hs76": (17, 325, -4.681787, 2.220446e-16, 4.714559e-05, 0.430467),
    "hs100": (12, 82, 680.6301, 1.266571e-10, 2.188096e-05, 0.568586),
    "hs113": (15, 16, 24.30637, 3.236107e-06, 3.610382e-05, 0.38742),
})

BETA_PHI_099 = _rows({
    "hs11": (7, 8, -8.498465, 2.140915e-07, 2.327186e-06, 0.160679),
    "hs14": (8, 40, 1.393453, 7.453297e-06, 3.47374e-06, 0.292307),
    "hs21": (2, 3, -99.96, 0.0, 1.059788e-07, 1.0),
    "hs28": (2, 3, 1.117108e-13, 0.0, 2.034355e-07, 1.0),
    "hs32": (3, 4, 1.000217, 8.459899e-14, 4.972783e-05, 0.228768),
    "hs35": (1, 2, 0.1111111, 0.0, 8.332954e-05, 1.0),
    "hs41": (6, 7, 1.925926, 1.833479e-06, 6.510768e-05, 0.327095),
    "hs43": (10, 12, -43.99999, 1.159501e-10, 2.722291e-06, 0.313363),
    "hs48": (4, 5, 8.94342e-21, 5.673768e-06, 7.563741e-10, 1.0),
    "hs51": (2, 3, 6.496671e-17, 1.204511e-08, 9.999249e-09, 1.0),
    "hs52": (10, 11, 5.326603, 7.782006e-06, 2.944367e-06, 0.082081),
    "hs61": (15, 250, -143.6461, 1.592513e-06, 3.957012e-07, 0.282333),
    "hs76": (3, 4, -4.681787, 3.049008e-16, 1.646295e-05, 0.531441),
    "hs100": (7, 16, 680.6301, 3.072384e-06, 3.762049e-06, 0.410794),
    "hs113": (6, 7, 24.30621, 7.842192e-06, 3.828328e-06, 0.430467),
})

INFEASIBLE = _rows({
    "hs11_inf": (9, 10, -7.998667, 1.0, 2.613585e-08, 0.1902388),
    "hs14_inf": (24, 55, 1.393462, 1.000002, 1.634047e-06, 0.3695115),
    "hs21_inf": (3, 68, -99.99, 1.0, 0.0, 0.07504732),
    "hs28_inf": (2, 3, 5.001065e-08, 1.0, 8.255296e-11, 1.368915e-07),
    "hs32_inf": (1, 2, 7.049285, 1.0, 1.216813e-06, 1.368915e-07),
    "hs35_inf": (1, 2, 2.228, 1.0, 0.0, 1.368915e-07),
    "hs41_inf": (4, 5, 1.950869, 1.0, 9.205041e-09, 6.02693e-08),
    "hs43_inf": (1, 2, -0.4101071, 1.0, 0.0, 1.368915e-07),
    "hs48_inf": (18, 178, 7.951999e-06, 1.000002, 1.978232e-06, 1.711143e-08),
    "hs51_inf": (20, 49, 1.048914e-10, 1.000006, 2.581146e-06, 0.03125),
    "hs52_inf": (22, 23, 5.499964, 1.000006, 2.523975e-06, 0.02257227),
    "hs61_inf": (22, 32, -71.89256, 2.750853, 2.527758e-07, 6.438145e-11),
    "hs76_inf": (1, 2, -1.25798, 1.0, 0.0, 1.368915e-07),
    "hs100_inf": (1, 2, 705.0369, 1.0, 2.73783e-06, 1.368915e-07),
    "hs113_inf": (22, 48, 42.40308, 1.0, 1.803741e-06, 0.0338011),
})

# problems gated by the feasible regression and trajectory checks
FEASIBLE_GATED = ["hs11", "hs21", "hs28", "hs35", "hs43", "hs48", "hs51", "hs52", "hs61", "hs76", "hs100"]
TRAJECTORY_PROBLEMS = ["hs11", "hs43", "hs61"]
