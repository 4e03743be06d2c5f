"""Compare the compiled and pure-python evolution kernels.

Times three representative workloads (driven dim-4 transfer, static dim-4
hold, dim-32 sideband flop), checks that both backends agree on the final
state, and prints a table.  Run from the repo root:

    python3 benchmarks/bench_backends.py --repeats 3
"""

import argparse
import json
import math
import time

import numpy as np

from dressedion.backend import available_backends
from dressedion.core import basis_state
from dressedion.hamiltonian import TrapMode, sideband_channels
from dressedion.propagate import compile_schedule, compile_static, evolve
from dressedion.schedule import Schedule, StirapParams, stirap_hold, stirap_schedule

TAU = 2.0 * math.pi


def _workloads():
    p = StirapParams(f_rabi=36.5e3)
    transfer = compile_schedule(stirap_schedule(p),
                                dt={"rampIn": p.dt, "rampOut": p.dt})

    hold = compile_schedule(Schedule((stirap_hold(p, 0.0, 20e-3),)),
                            dt={"hold": 2e-6})

    mode = TrapMode.from_eta(nu=TAU * 200e3, eta=0.05, n_fock=8)
    omega_g = TAU * 1e3
    stat, chan = sideband_channels(mode, omega_g, 0.0)
    t_pi = math.pi / (math.sqrt(2.0) * mode.eta * omega_g)
    sideband = compile_static(stat, chan, t_pi / 10.0, t_pi / 20000.0,
                              name="sideband")

    d4 = basis_state("0")
    d32 = np.kron(basis_state("0"), np.eye(mode.n_fock)[0])
    return (("transfer dim=4 driven", transfer, d4),
            ("hold     dim=4 static", hold, d4),
            ("sideband dim=32 driven", sideband, d32))


def _time(compiled, psi0, backend, repeats):
    best = math.inf
    state = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        traj = evolve(compiled, psi0, backend_name=backend)
        best = min(best, time.perf_counter() - t0)
        state = traj.states[-1]
    return best, state


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repeats per case; the minimum is reported")
    ap.add_argument("--json", metavar="PATH",
                    help="also dump the timings as JSON")
    args = ap.parse_args(argv)

    backends = available_backends()
    rows = []
    print(f"backends: {', '.join(backends)}")
    print(f"{'workload':<24}" + "".join(f"{b:>12}" for b in backends)
          + ("" if len(backends) < 2 else f"{'ratio p/c':>12}"))
    for label, compiled, psi0 in _workloads():
        n_steps = sum(blk.n_steps for blk in compiled.blocks)
        times = {}
        states = {}
        for b in backends:
            times[b], states[b] = _time(compiled, psi0, b, args.repeats)
        if len(backends) == 2:
            gap = np.abs(states["compiled"] - states["python"]).max()
            if gap > 1e-10:
                raise SystemExit(f"{label}: backends disagree by {gap:.2e}")
        cells = "".join(f"{times[b]:>11.4f}s" for b in backends)
        ratio = ("" if len(backends) < 2
                 else f"{times['python'] / times['compiled']:>12.2f}")
        print(f"{label:<24}{cells}{ratio}   ({n_steps} steps)")
        rows.append({"workload": label, "n_steps": n_steps, **times})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1, sort_keys=True)
            fh.write("\n")


if __name__ == "__main__":
    main()
