"""Observed order of both integrators on the Example 2 scalar reduction.

From 0.6 at -1 and 0.4 at +1 the mean obeys m' = m (m^2 - 1), which has a
closed form; errors at ``t_end`` are compared across halved step sizes.
"""

import argparse
import math

from polyrep import DiscreteMeasure, IntegratorConfig, Linear2mzw, StrategySpace, integrate


def exact_mean(t, m0):
    u0 = m0 * m0
    g = math.exp(-2.0 * t)
    return math.copysign(math.sqrt(u0 * g / (1.0 - u0 + u0 * g)), m0)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--t-end", type=float, default=2.0)
    parser.add_argument("--levels", type=int, default=5)
    args = parser.parse_args()

    space = StrategySpace.interval(-1.0, 1.0)
    k = Linear2mzw(space)
    q0 = DiscreteMeasure.from_atoms(space, [((-1.0,), 0.6), ((1.0,), 0.4)])
    exact = exact_mean(args.t_end, -0.2)
    dts = [1 / 32 / 2**i for i in range(args.levels)]
    print(f"{'dt':>10s} {'method':>12s} {'error':>12s} {'order':>7s}")
    for method in ("Exponential", "RK4"):
        prev = None
        for dt in dts:
            tr = integrate(k, q0, IntegratorConfig(method=method, dt=dt, t_end=args.t_end))
            err = abs(float(tr.points[:, 0] @ tr.weights[-1]) - exact)
            order = f"{math.log2(prev / err):7.2f}" if prev and err > 0 else "      -"
            print(f"{dt:10.3e} {method:>12s} {err:12.3e} {order}")
            prev = err


if __name__ == "__main__":
    main()
