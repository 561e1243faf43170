"""Adaptive vs conventional on one scenario over a grid of gain-law settings.

    python scripts/sweep_adaptation.py configs/default.toml --weights out/weights.bin --duration 20

Prints settling time, chattering index and the final effective gains for the
conventional run and for every (gradient source, alpha, gamma) triple.
"""

import argparse
import itertools
import math
import warnings
from dataclasses import replace

from se3dock import adapt, config, sim
from se3dock.dynamics import NonPhysicalInertia


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config")
    ap.add_argument("--weights", help="defaults to [adaptation] weights from the config")
    ap.add_argument("--duration", type=float)
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.01, 0.1, 1.0])
    ap.add_argument("--gamma", type=float, nargs="+", default=[0.0, 0.5])
    ap.add_argument("--source", nargs="+", default=["identifier", "tuner"])
    args = ap.parse_args()

    warnings.simplefilter("ignore", NonPhysicalInertia)
    cfg = config.load(args.config)
    sc = cfg.scenario
    if args.duration is not None:
        sc = replace(sc, duration=args.duration)
    models = adapt.load_weights(args.weights or cfg.weights)
    t_max = sim.bound_for(sc)

    def row(label, log):
        m = sim.metrics(log, t_max)
        ts = "inf" if math.isinf(m.settling_time) else f"{m.settling_time:.2f}"
        k1, k2 = log.gains[-1]
        print(f"{label:<28}{ts:>10}{m.chattering_index:>14.4g}{k1:>9.3f}{k2:>9.3f}")

    print(f"{'run':<28}{'settle[s]':>10}{'chattering':>14}{'ks1':>9}{'ks2':>9}")
    row("conventional", sim.run(replace(sc, variant="conventional"), models))
    for src, a, g in itertools.product(args.source, args.alpha, args.gamma):
        ad = replace(sc.adaptation, alpha=a, gamma=g, gradient_source=src)
        row(f"{src} a={a:g} g={g:g}", sim.run(replace(sc, variant="adaptive", adaptation=ad), models))


if __name__ == "__main__":
    main()
