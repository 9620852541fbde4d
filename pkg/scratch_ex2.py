import time

import numpy as np

from compactwave.compact import run
from compactwave.grid import GridField, inner_l2, norm_l2, seminorm_h1
from compactwave.oracles import get_scenario

TABLES = {
    # scenario: {scheme: {(N,M): (e_L2, e_H1, e_E)}}
    "radial-u0-ramp": {
        "compact": {(81, 27): (4.444064e-4, 8.412731e-2, 7.300600e-2),
                    (135, 45): (2.308279e-4, 7.058185e-2, 6.029682e-2)},
        "explicit": {(81, 27): (9.032524e-4, 1.316278e-1, 1.104166e-1),
                     (135, 45): (5.365153e-4, 1.168099e-1, 9.645128e-2)},
    },
    "radial-u0-bump": {
        "compact": {(81, 27): (1.801824e-5, 3.162480e-3, 2.714343e-3),
                    (135, 45): (6.263696e-6, 1.740913e-3, 1.519010e-3)},
    },
    "radial-u1-step": {
        "compact": {(81, 27): (2.173270e-4, 3.947877e-2, 3.380764e-2),
                    (135, 45): (1.325706e-4, 3.207199e-2, 2.725321e-2)},
    },
    "radial-u1-ramp": {
        "compact": {(81, 27): (3.486452e-6, 6.014188e-4, 5.177318e-4),
                    (135, 45): (1.201817e-6, 3.370573e-4, 2.921310e-4)},
    },
    "radial-f-step": {
        "compact": {(81, 27): (None, 8.346416e-4, 5.933564e-4),
                    (135, 45): (None, 4.141449e-4, 3.080528e-4)},
    },
    "radial-f-ramp": {
        "compact": {(81, 27): (None, 5.459770e-6, 4.493218e-6),
                    (135, 45): (None, 1.857594e-6, 1.523632e-6)},
    },
}


def measure(scn, mesh, med, state):
    exact = scn.exact_sampler(mesh)
    ht = mesh.time_step
    T = mesh.time_extent
    errM = GridField(mesh, exact(T).values - state.v_cur.values)
    errM1 = GridField(mesh, exact(T - ht).values - state.v_prev.values)
    e_l2 = norm_l2(errM)
    e_h1 = seminorm_h1(errM, (1.0,) * 3)
    dt = GridField(mesh, (errM.values - errM1.values) / ht)
    e_E = np.sqrt(inner_l2(dt, dt) + seminorm_h1(errM, med.a) ** 2)
    return e_l2, e_h1, e_E


for name, schemes in TABLES.items():
    scn = get_scenario(name)
    for scheme, refs in schemes.items():
        prev = None
        for (N, M), ref in refs.items():
            t0 = time.time()
            mesh, med, prob = scn.build(N, M)
            res = run(prob, med, mesh, scheme=scheme)
            e = measure(scn, mesh, med, res.state)
            rel = ["    -  " if r is None else f"{(v-r)/r:+7.2%}" for v, r in zip(e, ref)]
            print(f"{name:16s} {scheme:8s} N={N:3d} wall={time.time()-t0:5.1f}s "
                  f"e=({e[0]:.4e},{e[1]:.4e},{e[2]:.4e}) dev=({', '.join(rel)})")
            if prev is not None:
                rate = np.log(np.array(prev) / np.array(e)) / np.log(5 / 3)
                print(f"{'':16s} {'':8s} rates: {rate[0]:.3f} {rate[1]:.3f} {rate[2]:.3f}")
            prev = e
