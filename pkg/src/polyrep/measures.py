"""Finitely-supported measures on a box strategy space.

A population state is stored as an ``(n, d)`` array of atom locations and a
length-``n`` weight vector. Signed measures (differences of states) share the
same type with ``probability=False``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AbsoluteContinuityViolated, InvalidMeasure, MismatchedSpace, OutOfSpace

MERGE_TOL = 1e-9
DROP_TOL = 1e-12
MASS_TOL = 1e-9
POSITIVITY_FLOOR = 1e-300


def _as_tuple(values) -> tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class StrategySpace:
    """Compact box ``prod_i [lower_i, upper_i]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower, upper = _as_tuple(self.lower), _as_tuple(self.upper)
        if len(lower) != len(upper) or not lower:
            raise ValueError("lower and upper must be non-empty and of equal length")
        if not all(lo < hi for lo, hi in zip(lower, upper)):
            raise ValueError("lower must be strictly below upper in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def interval(cls, lower: float, upper: float) -> StrategySpace:
        return cls((lower,), (upper,))

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def check_points(self, points: np.ndarray) -> None:
        if points.ndim != 2 or points.shape[1] != self.dimension:
            raise OutOfSpace(f"expected points of dimension {self.dimension}, got shape {points.shape}")
        if not np.all(np.isfinite(points)):
            raise OutOfSpace("non-finite coordinates")
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        outside = np.any((points < lo) | (points > hi), axis=1)
        if np.any(outside):
            raise OutOfSpace(f"point {points[outside][0].tolist()} lies outside {self}")


def as_points(coords, dimension: int) -> np.ndarray:
    """Coerce scalars, vectors or lists of vectors to an ``(n, dimension)`` array."""
    arr = np.asarray(coords, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dimension == 1 else arr.reshape(1, -1)
    return arr


def _lex_order(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return np.zeros(0, dtype=int)
    return np.lexsort(points.T[::-1])


def cluster_points(points: np.ndarray, tol: float = MERGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Group points lying within ``tol`` (max-norm) of a representative.

    Representatives are the lexicographically first member of their group, so
    the returned array is sorted and pairwise further apart than ``tol``.
    Returns ``(representatives, labels)`` with ``labels[i]`` indexing the
    representative of ``points[i]``.
    """
    labels = np.empty(len(points), dtype=int)
    reps: list[np.ndarray] = []
    for idx in _lex_order(points):
        p = points[idx]
        if reps:
            gaps = np.max(np.abs(np.asarray(reps) - p), axis=1)
            hits = np.flatnonzero(gaps <= tol)
            if hits.size:
                labels[idx] = hits[0]
                continue
        labels[idx] = len(reps)
        reps.append(p)
    dim = points.shape[1] if points.ndim == 2 else 0
    return (np.asarray(reps) if reps else np.zeros((0, dim))), labels


def match_points(source: np.ndarray, target: np.ndarray, tol: float = MERGE_TOL) -> np.ndarray:
    """Index into ``target`` of the point coinciding with each source point, or -1."""
    out = np.full(len(source), -1, dtype=int)
    if len(source) == 0 or len(target) == 0:
        return out
    gaps = np.max(np.abs(source[:, None, :] - target[None, :, :]), axis=2)
    hit = gaps <= tol
    found = hit.any(axis=1)
    out[found] = np.argmax(hit[found], axis=1)
    return out


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted atoms on a :class:`StrategySpace`.

    The constructor validates but does not canonicalize; use
    :meth:`from_atoms` or :func:`canonicalize` for user input.
    """

    space: StrategySpace
    points: np.ndarray
    weights: np.ndarray
    probability: bool = True

    def __post_init__(self):
        points = as_points(self.points, self.space.dimension).copy()
        weights = np.asarray(self.weights, dtype=float).reshape(-1).copy()
        if len(weights) == 0:
            points = np.zeros((0, self.space.dimension))
        if len(points) != len(weights):
            raise InvalidMeasure(f"{len(points)} points but {len(weights)} weights")
        self.space.check_points(points)
        if not np.all(np.isfinite(weights)):
            raise InvalidMeasure("non-finite weights")
        if self.probability:
            if np.any(weights < 0):
                raise InvalidMeasure("probability measure with negative weight")
            if abs(weights.sum() - 1.0) > MASS_TOL:
                raise InvalidMeasure(f"probability measure has total mass {weights.sum()!r}")
        points.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_atoms(
        cls,
        space: StrategySpace,
        atoms: Iterable[tuple[Sequence[float] | float, float]],
        probability: bool = True,
    ) -> DiscreteMeasure:
        atoms = list(atoms)
        points = np.array([as_points(c, space.dimension)[0] for c, _ in atoms]).reshape(-1, space.dimension)
        weights = np.array([w for _, w in atoms], dtype=float)
        return canonicalize(_raw(space, points, weights, probability))

    @classmethod
    def zero(cls, space: StrategySpace) -> DiscreteMeasure:
        return cls(space, np.zeros((0, space.dimension)), np.zeros(0), probability=False)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def atoms(self) -> list[tuple[tuple[float, ...], float]]:
        return [(tuple(map(float, p)), float(w)) for p, w in zip(self.points, self.weights)]

    def weight_at(self, coords) -> float:
        idx = match_points(as_points(coords, self.space.dimension), self.points)[0]
        return 0.0 if idx < 0 else float(self.weights[idx])

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def to_records(self) -> list[dict]:
        return [{"coords": list(c), "weight": w} for c, w in self.atoms()]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (
            self.space == other.space
            and self.probability == other.probability
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def _combine(self, other: DiscreteMeasure, sign: float) -> DiscreteMeasure:
        _check_space(self, other)
        points = np.vstack([self.points, other.points])
        weights = np.concatenate([self.weights, sign * other.weights])
        return canonicalize(_raw(self.space, points, weights, False))

    def __add__(self, other: DiscreteMeasure) -> DiscreteMeasure:
        return self._combine(other, 1.0)

    def __sub__(self, other: DiscreteMeasure) -> DiscreteMeasure:
        return self._combine(other, -1.0)

    def __mul__(self, scalar: float) -> DiscreteMeasure:
        return canonicalize(_raw(self.space, self.points, float(scalar) * self.weights, False))

    __rmul__ = __mul__


def _raw(space, points, weights, probability) -> DiscreteMeasure:
    # Skip the probability check; canonicalize re-validates.
    m = DiscreteMeasure(space, points, weights, probability=False)
    object.__setattr__(m, "probability", probability)
    return m


def _check_space(*measures: DiscreteMeasure) -> None:
    first = measures[0].space
    for m in measures[1:]:
        if m.space != first:
            raise MismatchedSpace(f"{m.space} != {first}")


def dirac(space: StrategySpace, coords) -> DiscreteMeasure:
    return DiscreteMeasure.from_atoms(space, [(coords, 1.0)])


def canonicalize(m: DiscreteMeasure) -> DiscreteMeasure:
    """Merge coincident atoms, drop negligible weights, sort lexicographically."""
    reps, labels = cluster_points(m.points)
    weights = np.bincount(labels, weights=m.weights, minlength=len(reps)) if len(reps) else np.zeros(0)
    keep = np.abs(weights) >= DROP_TOL
    return DiscreteMeasure(m.space, reps[keep], weights[keep], probability=m.probability)


def align(*measures: DiscreteMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Express several measures on their common support.

    Returns ``(points, W)`` where row ``i`` of ``W`` holds the weights of
    ``measures[i]`` on ``points`` (zeros off its support). Nothing is dropped.
    """
    _check_space(*measures)
    points = np.vstack([m.points for m in measures])
    reps, labels = cluster_points(points)
    W = np.zeros((len(measures), len(reps)))
    start = 0
    for i, m in enumerate(measures):
        np.add.at(W[i], labels[start : start + len(m)], m.weights)
        start += len(m)
    return reps, W


def variational_distance(p: DiscreteMeasure, q: DiscreteMeasure) -> float:
    """Variational (strong) distance ``2 sup_B |P(B) - Q(B)|``.

    For atomic measures this is the atom-wise L1 distance.
    """
    _, W = align(p, q)
    return float(np.abs(W[0] - W[1]).sum())


def lebesgue_decompose(q: DiscreteMeasure, p: DiscreteMeasure) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Split ``q`` into the part on ``supp(p)`` and the part singular to ``p``."""
    _check_space(q, p)
    on = match_points(q.points, p.points) >= 0
    q1 = DiscreteMeasure(q.space, q.points[on], q.weights[on], probability=False)
    q2 = DiscreteMeasure(q.space, q.points[~on], q.weights[~on], probability=False)
    return q1, q2


def target_weights(pstar: DiscreteMeasure, q: DiscreteMeasure) -> np.ndarray:
    """Weights of ``q`` on the atoms of ``pstar`` (zero where absent)."""
    _check_space(pstar, q)
    idx = match_points(pstar.points, q.points)
    return np.where(idx >= 0, q.weights[np.maximum(idx, 0)], 0.0) if len(idx) else np.zeros(0)


def kl_weights(alpha: np.ndarray, beta: np.ndarray) -> float | np.ndarray:
    """``sum_j alpha_j ln(alpha_j / beta_j)`` over the last axis of ``beta``.

    Evaluated as ``-sum alpha log1p((beta - alpha) / alpha)`` to avoid
    cancellation near ``beta = alpha``.
    """
    beta = np.asarray(beta, dtype=float)
    bad = ~(beta > POSITIVITY_FLOOR)
    if np.any(bad):
        raise AbsoluteContinuityViolated(
            f"target atom has weight {beta[bad].flat[0]!r} in the compared state"
        )
    out = -np.sum(alpha * np.log1p((beta - alpha) / alpha), axis=-1)
    return float(out) if out.ndim == 0 else out


def kl_divergence(pstar: DiscreteMeasure, q: DiscreteMeasure) -> float:
    """Relative entropy of ``pstar`` with respect to ``q``; the Lyapunov function V(Q)."""
    return kl_weights(pstar.weights, target_weights(pstar, q))


def pinsker_gap(pstar: DiscreteMeasure, q: DiscreteMeasure) -> tuple[float, float]:
    """Return ``(||q - pstar||**2, V(q))``.

    Classical Pinsker guarantees ``lhs <= 2 * rhs`` for this norm; the
    unfactored ``lhs <= rhs`` is not guaranteed.
    """
    return variational_distance(pstar, q) ** 2, kl_divergence(pstar, q)


def neighborhood_bounds(pstar: DiscreteMeasure, q: DiscreteMeasure) -> tuple[float, float]:
    """Two-sided bound on ``||q - pstar||`` from the weights on ``supp(pstar)``.

    ``2 max_j |a_j - b_j| <= ||q - pstar|| <= 2 max(sum_j |a_j - b_j|, 2 (1 - sum_j b_j))``
    where ``a`` are the target weights and ``b`` the weights of ``q`` on the
    same atoms.
    """
    alpha = pstar.weights
    beta = target_weights(pstar, q)
    gaps = np.abs(alpha - beta)
    lower = 2.0 * float(gaps.max()) if len(gaps) else 0.0
    upper = 2.0 * max(float(gaps.sum()), 2.0 * (1.0 - float(beta.sum())))
    return lower, upper
