"""Chattering index and residual ||s|| of the conventional controller versus reaching gain.

    python scripts/noise_chattering.py --duration 10 --gains 0.2 0.5 1 2 4

Each gain is run with and without measurement noise (default covariance).
"""

import argparse
import warnings

import numpy as np

from se3dock import sim
from se3dock.dynamics import NonPhysicalInertia
from se3dock.noise import TangentNoiseModel


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--duration", type=float, default=10.0)
    ap.add_argument("--gains", type=float, nargs="+", default=[0.2, 0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    warnings.simplefilter("ignore", NonPhysicalInertia)

    print(f"{'ks':>6}{'noise':>7}{'TV 1st half':>14}{'TV 2nd half':>14}{'median |s| 2nd half':>22}")
    for ks in args.gains:
        for noisy in (False, True):
            sc = sim.Scenario(
                duration=args.duration,
                controller=sim.ControllerConfig(ks1=ks, ks2=ks),
                noise=TangentNoiseModel(seed=args.seed) if noisy else None,
            )
            lg = sim.run(sc)
            half = len(lg.t) // 2
            tv = np.linalg.norm(np.diff(lg.wrench, axis=0), axis=1)
            s = np.linalg.norm(lg.s[half:], axis=1)
            print(f"{ks:>6g}{'on' if noisy else 'off':>7}{tv[:half].sum():>14.4g}{tv[half:].sum():>14.4g}{np.median(s):>22.3e}")


if __name__ == "__main__":
    main()
