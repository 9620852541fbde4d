import time

import numpy as np

import compactwave as cw
from compactwave.compact import Medium, WaveProblem, run
from compactwave.grid import GridField, inner_l2, norm_l2, seminorm_h1

A = 1.0 / np.sqrt(3.0)


def u_exact(x, y, z, t):
    return np.cos(t - x - y - z)


def build(N, M, variable_rho=False):
    mesh = cw.make_mesh([1.0, 1.0, 1.0], N, 0.3, M)
    if variable_rho:
        rho_fn = lambda x, y, z: 1.0 + np.sin(2*np.pi*x)**2 * np.sin(2*np.pi*y)**2 * np.sin(2*np.pi*z)**2
        med = Medium.from_function(mesh, rho_fn, (A, A, A), rho_min=1.0, rho_max=2.0)
        f = lambda x, y, z, t: (1.0 - rho_fn(x, y, z)) * np.cos(t - x - y - z)
    else:
        med = Medium.constant(mesh, 1.0, (A, A, A))
        f = None
    gk1 = lambda x, y, z, t: (-1.0/3.0) * np.cos(t - x - y - z)
    prob = WaveProblem(
        u0=lambda x, y, z: np.cos(-x - y - z),
        u1=lambda x, y, z: -np.sin(-x - y - z),
        g=u_exact,
        gk=(gk1, gk1, gk1),
        f=f,
    )
    return mesh, med, prob


def errors(mesh, med, state):
    coords = mesh.node_coords()
    T = mesh.time_extent
    ht = mesh.time_step
    uM = np.broadcast_to(u_exact(*coords, T), mesh.shape)
    uM1 = np.broadcast_to(u_exact(*coords, T - ht), mesh.shape)
    errM = GridField(mesh, uM - state.v_cur.values)
    errM1 = GridField(mesh, uM1 - state.v_prev.values)
    a = med.a
    e_l2 = norm_l2(errM)
    h1_weighted = seminorm_h1(errM, a)
    h1_unweighted = seminorm_h1(errM, (1.0,) * mesh.ndim)
    dt = GridField(mesh, (errM.values - errM1.values) / ht)
    e_E = np.sqrt(inner_l2(dt, dt) + h1_weighted ** 2)
    return e_l2, h1_unweighted, e_E, h1_weighted


print("=== Example 1(a), constant rho ===")
prev = None
for N, M in [(81, 27), (135, 45)]:
    t0 = time.time()
    mesh, med, prob = build(N, M)
    res = run(prob, med, mesh)
    e_l2, e_h1u, e_E, _ = errors(mesh, med, res.state)
    print(f"N={N:3d} M={M:3d} step={res.step_seconds:5.1f}s  "
          f"e_L2={e_l2:.6e} e_H1u={e_h1u:.6e} e_E={e_E:.6e}")
    if prev:
        q = np.log(np.array(prev) / np.array([e_l2, e_h1u, e_E])) / np.log(5/3)
        print(f"    rates: {q[0]:.3f} {q[1]:.3f} {q[2]:.3f}  (table 3.981 3.979 3.977)")
    prev = [e_l2, e_h1u, e_E]
print("table N=81 : 2.434899e-11 1.618170e-10 1.166171e-10")
print("table N=135: 3.186161e-12 2.119400e-11 1.528949e-11")

print("=== Example 1(b), variable rho ===")
prev = None
for N, M in [(81, 27), (135, 45)]:
    mesh, med, prob = build(N, M, variable_rho=True)
    res = run(prob, med, mesh)
    e_l2, e_h1u, e_E, _ = errors(mesh, med, res.state)
    print(f"N={N:3d} M={M:3d} step={res.step_seconds:5.1f}s  "
          f"e_L2={e_l2:.6e} e_H1u={e_h1u:.6e} e_E={e_E:.6e}")
    if prev:
        q = np.log(np.array(prev) / np.array([e_l2, e_h1u, e_E])) / np.log(5/3)
        print(f"    rates: {q[0]:.3f} {q[1]:.3f} {q[2]:.3f}  (table 3.982 3.974 3.973)")
    prev = [e_l2, e_h1u, e_E]
print("table N=81 : 2.083224e-11 1.405375e-10 1.035755e-10")
print("table N=135: 2.725370e-12 1.845130e-11 1.361021e-11")
