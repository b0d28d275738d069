"""Payoff kernels of symmetric two-player games and the payoff functionals built on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .errors import BoundViolated, MismatchedSpace, OffGrid
from .measures import DiscreteMeasure, StrategySpace, as_points, match_points

BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class PayoffKernel:
    """Bounded payoff ``u(z, w)`` to a player using ``z`` against an opponent using ``w``.

    Subclasses implement ``_evaluate`` on point arrays; :meth:`matrix` adds
    the domain and declared-bound checks.
    """

    variant: ClassVar[str] = ""
    space: StrategySpace
    bound: float

    def _evaluate(self, Z: np.ndarray, W: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def matrix(self, zs, ws) -> np.ndarray:
        """Payoff matrix ``U[i, j] = u(zs[i], ws[j])``."""
        Z = as_points(zs, self.space.dimension)
        W = as_points(ws, self.space.dimension)
        self.space.check_points(Z)
        self.space.check_points(W)
        U = self._evaluate(Z, W)
        if U.size and np.max(np.abs(U)) > self.bound + BOUND_SLACK * max(1.0, self.bound):
            raise BoundViolated(f"|u| reached {np.max(np.abs(U))!r} > declared bound {self.bound!r}")
        return U

    def spec(self) -> dict:
        return {"variant": self.variant, "params": self.params(), "bound": self.bound}


def _require_1d(space: StrategySpace, variant: str) -> None:
    if space.dimension != 1:
        raise ValueError(f"{variant} is defined on one-dimensional strategy spaces only")


def _affine_sup(space, a, b, c, d) -> float:
    # bilinear in (z, w): the sup of |u| over the box is attained at a corner
    lo, hi = space.lower[0], space.upper[0]
    return max(abs(a + b * z + c * w + d * z * w) for z in (lo, hi) for w in (lo, hi))


@dataclass(frozen=True)
class AffineQuadratic(PayoffKernel):
    """``u(z, w) = a + b z + c w + d z w`` on an interval."""

    variant: ClassVar[str] = "AffineQuadratic"
    bound: float = None
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        _require_1d(self.space, self.variant)
        if self.bound is None:
            object.__setattr__(self, "bound", _affine_sup(self.space, self.a, self.b, self.c, self.d))

    def _evaluate(self, Z, W):
        z, w = Z[:, 0][:, None], W[:, 0][None, :]
        return self.a + self.b * z + self.c * w + self.d * z * w

    def params(self):
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


@dataclass(frozen=True)
class Linear2mzw(PayoffKernel):
    """``u(z, w) = 2 - z w``; the default space is ``[-1, 1]`` where the bound is 3."""

    variant: ClassVar[str] = "Linear2mzw"
    space: StrategySpace = field(default_factory=lambda: StrategySpace.interval(-1.0, 1.0))
    bound: float = None

    def __post_init__(self):
        _require_1d(self.space, self.variant)
        if self.bound is None:
            object.__setattr__(self, "bound", _affine_sup(self.space, 2.0, 0.0, 0.0, -1.0))

    def _evaluate(self, Z, W):
        return 2.0 - Z[:, 0][:, None] * W[:, 0][None, :]


@dataclass(frozen=True)
class HarvestPiecewise(PayoffKernel):
    """``u(z, w) = w`` if ``z < w`` else ``z - w``.

    At ``z == w`` the second branch applies, so ``u(z, z) = 0``.
    """

    variant: ClassVar[str] = "HarvestPiecewise"
    space: StrategySpace = field(default_factory=lambda: StrategySpace.interval(0.0, 1.0))
    bound: float = None

    def __post_init__(self):
        _require_1d(self.space, self.variant)
        if self.bound is None:
            lo, hi = self.space.lower[0], self.space.upper[0]
            object.__setattr__(self, "bound", max(abs(lo), abs(hi), hi - lo))

    def _evaluate(self, Z, W):
        z, w = Z[:, 0][:, None], W[:, 0][None, :]
        return np.where(z < w, w, z - w)


@dataclass(frozen=True, eq=False)
class GridTable(PayoffKernel):
    """Payoffs tabulated on a finite set of grid points; no interpolation."""

    variant: ClassVar[str] = "GridTable"
    bound: float = None
    points: np.ndarray = None
    table: np.ndarray = None

    def __post_init__(self):
        points = as_points(self.points, self.space.dimension).copy()
        table = np.asarray(self.table, dtype=float).copy()
        n = len(points)
        if table.shape != (n, n):
            raise ValueError(f"table must be {n}x{n} for {n} grid points, got {table.shape}")
        self.space.check_points(points)
        points.flags.writeable = False
        table.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "table", table)
        if self.bound is None:
            object.__setattr__(self, "bound", float(np.max(np.abs(table))) if n else 0.0)

    def __eq__(self, other):
        if not isinstance(other, GridTable):
            return NotImplemented
        return (
            self.space == other.space
            and self.bound == other.bound
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.table, other.table)
        )

    __hash__ = None

    def _index(self, P):
        idx = match_points(P, self.points)
        if np.any(idx < 0):
            raise OffGrid(f"point {P[idx < 0][0].tolist()} is not a grid point")
        return idx

    def _evaluate(self, Z, W):
        return self.table[np.ix_(self._index(Z), self._index(W))]

    def params(self):
        return {"points": self.points.tolist(), "table": self.table.tolist()}


VARIANTS = {cls.variant: cls for cls in (AffineQuadratic, Linear2mzw, HarvestPiecewise, GridTable)}


def make_kernel(variant: str, space: StrategySpace, params: dict | None = None, bound: float | None = None) -> PayoffKernel:
    """Build a kernel from its serialized ``{variant, params, bound}`` description."""
    try:
        cls = VARIANTS[variant]
    except KeyError:
        raise ValueError(f"unknown kernel variant {variant!r}; expected one of {sorted(VARIANTS)}") from None
    return cls(space=space, bound=bound, **(params or {}))


def check_kernel_space(k: PayoffKernel, *measures: DiscreteMeasure) -> None:
    for m in measures:
        if m.space != k.space:
            raise MismatchedSpace(f"measure on {m.space} but kernel on {k.space}")


def payoff(k: PayoffKernel, z, w) -> float:
    return float(k.matrix(z, w)[0, 0])


def row_payoffs(k: PayoffKernel, zs, q: DiscreteMeasure) -> np.ndarray:
    """``E(delta_z, q)`` for each ``z`` in ``zs``."""
    check_kernel_space(k, q)
    return k.matrix(zs, q.points) @ q.weights


def mean_payoff(k: PayoffKernel, z, q: DiscreteMeasure) -> float:
    return float(row_payoffs(k, z, q)[0])


def expected_payoff(k: PayoffKernel, p: DiscreteMeasure, q: DiscreteMeasure) -> float:
    """``E(p, q) = sum_ij p_i q_j u(z_i, w_j)``; bilinear, so signed measures are accepted."""
    check_kernel_space(k, p, q)
    return float(p.weights @ k.matrix(p.points, q.points) @ q.weights)


def success(k: PayoffKernel, z, q: DiscreteMeasure) -> float:
    """Average success ``E(delta_z, q) - E(q, q)`` of strategy ``z`` in population ``q``."""
    return mean_payoff(k, z, q) - expected_payoff(k, q, q)


def frechet_form(k: PayoffKernel, p: DiscreteMeasure, q: DiscreteMeasure) -> float:
    """Quadratic form of the payoff derivative at ``p`` in direction ``q - p``.

    ``E(q,q) - E(p,q) - E(q,p) + E(p,p)``; negative definiteness asks for this
    to be at most ``-c ||q - p||**2``.
    """
    return (
        expected_payoff(k, q, q)
        - expected_payoff(k, p, q)
        - expected_payoff(k, q, p)
        + expected_payoff(k, p, p)
    )
