"""Replicator dynamics on finitely-supported population states.

On a finite support the measure-valued replicator equation reduces to the
weight ODE ``w_i' = w_i * sigma(z_i, Q)``. Atoms never appear or vanish, so
the payoff matrix of the initial support is computed once per integration.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import StepSizeTooLarge
from .games import PayoffKernel, check_kernel_space
from .measures import DiscreteMeasure, StrategySpace, align, kl_weights, match_points

METHODS = ("Exponential", "RK4")
STEP_CAP = 0.1


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    ``Exponential`` advances log-weights with the classical four-stage
    scheme and multiplies, ``w <- w * exp(dt * sigma_bar)``, so weights stay
    strictly positive; it always renormalizes. ``RK4`` applies the classical
    scheme to the weights directly and renormalizes only if asked.
    """

    method: str = "Exponential"
    dt: float = 0.01
    t_end: float = 10.0
    record_every: int = 1
    renormalize: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ValueError("t_end must be at least dt")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")

    def max_dt(self, kernel: PayoffKernel) -> float:
        return STEP_CAP / kernel.bound if kernel.bound > 0 else math.inf

    def check(self, kernel: PayoffKernel) -> None:
        if self.dt > self.max_dt(kernel):
            raise StepSizeTooLarge(
                f"dt={self.dt} exceeds {STEP_CAP}/bound = {self.max_dt(kernel)} for bound {kernel.bound}"
            )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded solution: weights over the fixed initial support.

    ``weights[r]`` is the state at ``times[r]``. ``v_values`` and
    ``distances`` are ``None`` unless integrated with a target.
    ``mass_errors`` holds ``|sum(w) - 1|`` of the step result before
    renormalization.
    """

    space: StrategySpace
    points: np.ndarray
    times: np.ndarray
    weights: np.ndarray
    mass_errors: np.ndarray
    target: DiscreteMeasure | None = None
    v_values: np.ndarray | None = None
    distances: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.times)

    def state(self, r: int) -> DiscreteMeasure:
        # Built directly: atoms with underflowing weight are kept, preserving the support.
        return DiscreteMeasure(self.space, self.points, self.weights[r])

    @property
    def states(self) -> list[DiscreteMeasure]:
        return [self.state(r) for r in range(len(self))]

    @property
    def final(self) -> DiscreteMeasure:
        return self.state(len(self) - 1)

    def legend(self) -> dict[str, list[float]]:
        return {f"w_{i + 1}": [float(c) for c in p] for i, p in enumerate(self.points)}

    def write_csv(self, path) -> Path:
        """Write the trajectory CSV and its atom legend; returns the legend path."""
        path = Path(path)
        fmt = lambda x: format(float(x), ".17g")  # noqa: E731
        n = self.weights.shape[1]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", *(f"w_{i + 1}" for i in range(n)), "V", "dist", "mass_err"])
            for r in range(len(self)):
                v = fmt(self.v_values[r]) if self.v_values is not None else ""
                d = fmt(self.distances[r]) if self.distances is not None else ""
                writer.writerow([fmt(self.times[r]), *map(fmt, self.weights[r]), v, d, fmt(self.mass_errors[r])])
        legend_path = path.with_name(path.name + ".legend.json")
        legend_path.write_text(json.dumps(self.legend(), indent=2) + "\n")
        return legend_path


def _success(U: np.ndarray, W: np.ndarray) -> np.ndarray:
    # rows of W are (possibly unnormalized) weight vectors
    UW = W @ U.T
    return UW - np.sum(W * UW, axis=-1, keepdims=True)


def replicator_rhs(k: PayoffKernel, q: DiscreteMeasure) -> np.ndarray:
    """Per-atom derivatives ``q_i * sigma(z_i, q)`` in canonical atom order."""
    check_kernel_space(k, q)
    U = k.matrix(q.points, q.points)
    return q.weights * _success(U, q.weights[None, :])[0]


def rest_point_residual(k: PayoffKernel, p: DiscreteMeasure) -> float:
    """Largest deviation of a support atom's payoff against ``p`` from ``E(p, p)``.

    Zero exactly when every atom earns the same payoff, i.e. ``p`` is a rest point.
    """
    check_kernel_space(k, p)
    rows = k.matrix(p.points, p.points) @ p.weights
    return float(np.max(np.abs(rows - p.weights @ rows)))


def _exponential_step(U, W, h):
    def sig(V):
        return _success(U, V / V.sum(axis=1, keepdims=True))

    k1 = sig(W)
    k2 = sig(W * np.exp(0.5 * h * k1))
    k3 = sig(W * np.exp(0.5 * h * k2))
    k4 = sig(W * np.exp(h * k3))
    return W * np.exp(h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)


def _rk4_step(U, W, h):
    def f(V):
        return V * _success(U, V)

    k1 = f(W)
    k2 = f(W + 0.5 * h * k1)
    k3 = f(W + 0.5 * h * k2)
    k4 = f(W + h * k3)
    return W + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def integrate(
    k: PayoffKernel,
    q0: DiscreteMeasure,
    cfg: IntegratorConfig,
    target: DiscreteMeasure | None = None,
) -> Trajectory:
    """Integrate the replicator dynamics from ``q0`` over ``[0, cfg.t_end]``.

    The state is recorded at step 0, every ``cfg.record_every`` steps and at
    ``t_end``. When ``target`` is given, the Lyapunov function and the
    variational distance to it are recorded as well.
    """
    return integrate_many(k, [q0], cfg, target)[0]


def integrate_many(
    k: PayoffKernel,
    starts: list[DiscreteMeasure],
    cfg: IntegratorConfig,
    target: DiscreteMeasure | None = None,
) -> list[Trajectory]:
    """Integrate several initial states in one batch.

    Runs share the union of their supports; an atom absent from a run has
    weight exactly zero and stays so under both schemes, so each returned
    trajectory is restricted to its own initial support.
    """
    if not starts:
        return []
    for q0 in starts:
        check_kernel_space(k, q0)
        if not q0.probability:
            raise ValueError("initial states must be probability measures")
    cfg.check(k)
    points, W = align(*starts)
    idx = None
    if target is not None:
        if target.space != starts[0].space:
            raise ValueError("target and initial states live on different spaces")
        idx = match_points(target.points, points)
        if np.any(idx < 0) or np.any(W[:, idx] <= 0):
            raise ValueError("supp(target) must be contained in every initial support")

    U = k.matrix(points, points)
    step = _exponential_step if cfg.method == "Exponential" else _rk4_step
    renormalize = cfg.renormalize or cfg.method == "Exponential"
    support = W > 0

    n_steps = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    times, rows, mass_errors = [0.0], [W.copy()], [np.abs(W.sum(axis=1) - 1.0)]
    for i in range(1, n_steps + 1):
        t = cfg.t_end if i == n_steps else i * cfg.dt
        h = t - (i - 1) * cfg.dt
        raw = step(U, W, h)
        totals = raw.sum(axis=1)
        W = raw / totals[:, None] if renormalize else raw
        if i % cfg.record_every == 0 or i == n_steps:
            times.append(t)
            rows.append(W.copy())
            mass_errors.append(np.abs(totals - 1.0))

    weights = np.stack(rows, axis=1)  # (run, record, atom)
    mass_errors = np.stack(mass_errors, axis=1)
    times = np.array(times)
    out = []
    for r, q0 in enumerate(starts):
        w = weights[r][:, support[r]]
        v_values = distances = None
        if target is not None:
            on = weights[r][:, idx]
            off = support[r].copy()
            off[idx] = False
            distances = np.abs(on - target.weights).sum(axis=1) + weights[r][:, off].sum(axis=1)
            v_values = kl_weights(target.weights, on)
        out.append(
            Trajectory(
                space=q0.space,
                points=points[support[r]],
                times=times,
                weights=w,
                mass_errors=mass_errors[r],
                target=target,
                v_values=v_values,
                distances=distances,
            )
        )
    return out
