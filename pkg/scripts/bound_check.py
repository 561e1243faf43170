"""Reaching time of ||s|| <= 1e-3 against the fixed-time bound for random initial errors.

    python scripts/bound_check.py --runs 100 --dt 0.01 0.001

Initial rotation errors are uniform in norm up to 0.5 rad, translations uniform in +-5 m.
Both the literal and the rigorous (power-mean) bound are reported.
"""

import argparse
import warnings

import numpy as np

from se3dock import sim
from se3dock.dynamics import NonPhysicalInertia
from se3dock.smc import settling_time_bound


def offsets(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        w = rng.normal(size=3)
        w *= rng.uniform(0.0, 0.5) / np.linalg.norm(w)
        yield np.concatenate([w, rng.uniform(-5.0, 5.0, 3)])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dt", type=float, nargs="+", default=[0.01])
    args = ap.parse_args()
    warnings.simplefilter("ignore", NonPhysicalInertia)

    base = sim.Scenario()
    lit = sim.bound_for(base)
    rig = settling_time_bound(base.controller.sliding, base.controller.reaching(), rigorous=True)
    print(f"T_max literal {lit:.4f} s, rigorous {rig:.4f} s")
    for dt in args.dt:
        sc = sim.Scenario(duration=max(lit, rig) + 0.5, dt=dt)
        times = np.array([sim.reaching_time(sim.run(sim.Scenario(duration=sc.duration, dt=dt, initial_offset=o))) for o in offsets(args.runs, args.seed)])
        print(
            f"dt {dt:g}: reaching time min {times.min():.3f} median {np.median(times):.3f} max {times.max():.3f} s; "
            f"above literal bound {int(np.sum(times > lit))}/{args.runs}, above rigorous {int(np.sum(times > rig))}/{args.runs}"
        )


if __name__ == "__main__":
    main()
