"""Benchmark the compiled assembly kernels against the NumPy fallback.

Times the three per-cell kernels (convection block, convection Jacobian
blocks, trilinear form) on realistic physical tables for a range of
meshes, plus one end-to-end nonlinear FOM step, and prints a timing
table with the speedup of the compiled path.  Cross-checks that both
backends agree to roundoff before timing anything.

Usage:
    python3 benchmarks/bench_kernels.py [--degree 2] [--meshes 16,32,64]
                                        [--repeats 5]
"""

import argparse
import time

import numpy as np

from podns._kernels import _assembly_cy_available, load_backend
from podns.assembly import assemble_operators, get_tables
from podns.fe_space import build_taylor_hood
from podns.mesh import build_rect_mesh


def _tables(nx, degree):
    mesh = build_rect_mesh(nx, nx)
    space = build_taylor_hood(mesh, degree)
    vs = space.velocity.scalar
    tab = get_tables(vs, 3 * degree - 1)
    rng = np.random.default_rng(1234 + nx)
    u = rng.standard_normal(2 * vs.num_dofs)
    v = rng.standard_normal(2 * vs.num_dofs)
    w = rng.standard_normal(2 * vs.num_dofs)
    ns = vs.num_dofs
    gathers = tuple(tab.gather(vec[:ns]) for vec in (u, v, w)) + tuple(
        tab.gather(vec[ns:]) for vec in (u, v, w)
    )
    ucx, vcx, wcx, ucy, vcy, wcy = gathers
    return space, tab, (ucx, ucy, vcx, vcy, wcx, wcy)


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _check_agreement(backends, tab, fields):
    ucx, ucy, vcx, vcy, wcx, wcy = fields
    ref = None
    for name, mod in backends:
        blk = mod.convection_block(ucx, ucy, tab.phi, tab.dphys, tab.wdet)
        jac = mod.convection_jacobian_extra(ucx, ucy, tab.phi, tab.dphys, tab.wdet)
        tri = mod.trilinear(ucx, ucy, vcx, vcy, wcx, wcy, tab.phi, tab.dphys, tab.wdet)
        if ref is None:
            ref = (blk, jac, tri)
            continue
        scale = max(np.abs(ref[0]).max(), 1.0)
        dev = max(
            np.abs(blk - ref[0]).max() / scale,
            np.abs(jac - ref[1]).max() / max(np.abs(ref[1]).max(), 1.0),
            abs(tri - ref[2]) / max(abs(ref[2]), 1.0),
        )
        print(f"backend agreement ({name} vs reference): {dev:.3e}")
        if dev > 1e-12:
            raise SystemExit("backends disagree; refusing to benchmark")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degree", type=int, default=2, choices=(2, 3))
    ap.add_argument("--meshes", default="16,32,64")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    meshes = [int(v) for v in args.meshes.split(",")]

    backends = [("numpy", load_backend("numpy"))]
    if _assembly_cy_available():
        backends.append(("cython", load_backend("cython")))
    else:
        print("compiled extension not available; timing NumPy path only")

    header = f"{'mesh':>6} {'cells':>7} {'kernel':>22}"
    for name, _ in backends:
        header += f" {name + ' [ms]':>13}"
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for nx in meshes:
        space, tab, fields = _tables(nx, args.degree)
        if nx == meshes[0]:
            _check_agreement(backends, tab, fields)
        ucx, ucy, vcx, vcy, wcx, wcy = fields
        nc = tab.wdet.shape[0]
        kernels = [
            ("convection_block", lambda m: m.convection_block(
                ucx, ucy, tab.phi, tab.dphys, tab.wdet)),
            ("convection_jacobian", lambda m: m.convection_jacobian_extra(
                ucx, ucy, tab.phi, tab.dphys, tab.wdet)),
            ("trilinear", lambda m: m.trilinear(
                ucx, ucy, vcx, vcy, wcx, wcy, tab.phi, tab.dphys, tab.wdet)),
        ]
        for kname, call in kernels:
            times = [
                _time(lambda m=mod: call(m), args.repeats) for _, mod in backends
            ]
            row = f"{nx:>6} {nc:>7} {kname:>22}"
            for t in times:
                row += f" {t * 1e3:>13.3f}"
            if len(times) == 2:
                row += f" {times[0] / times[1]:>8.2f}x"
            print(row)
    print()
    print("end-to-end: one implicit Euler step (current backend)")
    from podns.fom_solver import FomConfig, FomSolver
    from podns.manufactured import decaying_vortex

    for nx in meshes[:2]:
        mesh = build_rect_mesh(nx, nx)
        space = build_taylor_hood(mesh, args.degree)
        problem = decaying_vortex(1e-2)
        cfg = FomConfig(nu=1e-2, dt=1e-2, t_end=1e-2, integrator="ie",
                        store_derivatives=False)
        solver = FomSolver(space, cfg, problem)
        t0 = time.perf_counter()
        solver.run()
        print(f"  mesh {nx}: {time.perf_counter() - t0:.3f} s")


if __name__ == "__main__":
    main()
