"""Basin probe around the Example 2 rest point, split by mutant mass.

Mutant atoms at off-support locations earn ``2 - z m``; once the population
mean ``m`` has decayed their success is zero, so their mass freezes at
whatever it is when ``m`` vanishes. Final distances are therefore driven by
the initial mutant mass, which this script tabulates.
"""

import argparse

import numpy as np

from polyrep import DiscreteMeasure, IntegratorConfig, Linear2mzw, NeighborhoodSpec, StrategySpace, basin_probe


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epsilon", type=float, default=0.2)
    parser.add_argument("--n-samples", type=int, default=50)
    parser.add_argument("--t-end", type=float, default=15.0)
    parser.add_argument("--seed", type=int, default=2)
    args = parser.parse_args()

    space = StrategySpace.interval(-1.0, 1.0)
    k = Linear2mzw(space)
    pstar = DiscreteMeasure.from_atoms(space, [((-1.0,), 0.5), ((1.0,), 0.5)])
    spec = NeighborhoodSpec(args.epsilon, args.n_samples, seed=args.seed)
    cfg = IntegratorConfig(dt=0.01, t_end=args.t_end, record_every=50)
    rep = basin_probe(k, pstar, spec, cfg)

    print(f"{'mutant mass 0':>14s} {'mutant mass T':>14s} {'|m(T)|':>10s} {'dist(T)':>10s}")
    for tr in sorted(rep.trajectories, key=lambda t: t.distances[-1]):
        off = ~np.isin(tr.points[:, 0], [-1.0, 1.0])
        m_end = abs(float(tr.points[:, 0] @ tr.weights[-1]))
        print(
            f"{tr.weights[0][off].sum():14.6f} {tr.weights[-1][off].sum():14.6f} "
            f"{m_end:10.2e} {tr.distances[-1]:10.6f}"
        )
    print(f"max final distance {rep.max_final_distance:.4g}, max excursion {rep.max_excursion:.4g}")


if __name__ == "__main__":
    main()
