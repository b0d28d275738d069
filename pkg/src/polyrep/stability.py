"""Empirical stability tests for polymorphic rest points.

Static tests sample population states ``Q`` from a variational ball around
the target ``P*`` and evaluate payoff margins; dynamic checks integrate from
such samples and audit the relative-entropy Lyapunov function along the way.
Sampling can exhibit counterexamples but cannot prove a universally
quantified property, so every verdict here is labelled empirical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import IntegratorConfig, Trajectory, integrate_many, rest_point_residual
from .errors import InvalidEpsilon, MissingDiagnostics, NotARestPoint, SamplingExhausted
from .games import GridTable, PayoffKernel, expected_payoff, frechet_form
from .measures import (
    DROP_TOL,
    DiscreteMeasure,
    StrategySpace,
    kl_divergence,
    match_points,
    variational_distance,
)

MARGIN_TOL = 1e-10
REST_TOL = 1e-10
C_TOL = 1e-8
SKIP_DISTANCE = 1e-9
MAX_REJECTIONS = 1000
V_NONNEG_SLACK = 1e-12
PINSKER_SLACK = 1e-9
MONOTONE_SLACK = 1e-9

NEGDEF = "negative definite (empirical)"
NOT_NEGDEF = "not negative definite"
NOT_APPLICABLE = "not applicable"


@dataclass(frozen=True)
class NeighborhoodSpec:
    epsilon: float
    n_samples: int
    mutant_grid: int = 4
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidEpsilon("epsilon must be positive")
        if self.n_samples < 0 or self.mutant_grid < 1 or self.seed < 0:
            raise ValueError("n_samples >= 0, mutant_grid >= 1 and seed >= 0 are required")

    def threshold(self, pstar: DiscreteMeasure) -> float:
        """Radius below which every state in the ball charges all atoms of ``pstar``."""
        return 2.0 * float(pstar.weights.min())

    def validate(self, pstar: DiscreteMeasure) -> None:
        if not self.epsilon < self.threshold(pstar):
            raise InvalidEpsilon(
                f"epsilon={self.epsilon} must be below 2*min(weights)={self.threshold(pstar)}"
            )


def _records(m: DiscreteMeasure | None):
    return None if m is None else m.to_records()


def _box_grid(space: StrategySpace, n: int) -> np.ndarray:
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in zip(space.lower, space.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def mutant_locations(pstar: DiscreteMeasure, n: int, kernel: PayoffKernel | None = None) -> np.ndarray:
    """Off-support locations available to the mutant part of a sampled state.

    Cell midpoints of an ``n``-per-axis grid over the box, or, for a
    :class:`GridTable` kernel, up to ``n`` evenly spaced off-support table points.
    """
    if isinstance(kernel, GridTable):
        pool = kernel.points[match_points(kernel.points, pstar.points) < 0]
        if len(pool) > n:
            pool = pool[np.unique(np.linspace(0, len(pool) - 1, n).round().astype(int))]
    else:
        grid = _box_grid(pstar.space, n)
        pool = grid[match_points(grid, pstar.points) < 0]
    if len(pool) == 0:
        raise ValueError("no off-support mutant locations available")
    return pool


def sample_neighborhood(
    pstar: DiscreteMeasure, spec: NeighborhoodSpec, kernel: PayoffKernel | None = None
) -> list[DiscreteMeasure]:
    """Draw states ``sum_j b_j delta_{x_j} + b_{k+1} R`` with ``||Q - P*|| < epsilon``.

    Target weights are perturbed uniformly by at most ``epsilon / (2k)``, the
    mutant mass is uniform on ``[0, epsilon / 4]`` and is spread over a random
    subset of the mutant locations with flat Dirichlet weights. Draws that
    leave the ball or zero out a target atom are rejected.
    """
    spec.validate(pstar)
    if spec.n_samples == 0:
        return []
    rng = np.random.default_rng(spec.seed)
    alpha = pstar.weights
    k = len(alpha)
    grid = mutant_locations(pstar, spec.mutant_grid, kernel)
    samples = []
    for _ in range(spec.n_samples):
        for _attempt in range(MAX_REJECTIONS):
            delta = rng.uniform(-1.0, 1.0, k) * spec.epsilon / (2 * k)
            mass = rng.uniform(0.0, spec.epsilon / 4)
            n_loc = int(rng.integers(1, len(grid) + 1))
            locs = rng.choice(len(grid), size=n_loc, replace=False)
            spread = rng.dirichlet(np.ones(n_loc))
            beta = alpha + delta - (delta.sum() + mass) / k
            if beta.min() <= 0:
                continue
            points = np.vstack([pstar.points, grid[locs]])
            weights = np.concatenate([beta, mass * spread])
            q = DiscreteMeasure.from_atoms(pstar.space, zip(points, weights))
            if variational_distance(q, pstar) < spec.epsilon:
                samples.append(q)
                break
        else:
            raise SamplingExhausted(f"{MAX_REJECTIONS} consecutive rejections at epsilon={spec.epsilon}")
    return samples


def margin(k: PayoffKernel, pstar: DiscreteMeasure, q: DiscreteMeasure) -> float:
    """Payoff advantage ``E(P*, Q) - E(Q, Q)`` of the target against ``Q``."""
    return expected_payoff(k, pstar, q) - expected_payoff(k, q, q)


@dataclass
class MarginReport:
    kind: str
    min_margin: float | None
    argmin_sample: DiscreteMeasure | None
    verdict: bool | None
    tolerance: float
    n_evaluated: int
    label: str = "empirical"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "min_margin": self.min_margin,
            "argmin_sample": _records(self.argmin_sample),
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "n_evaluated": self.n_evaluated,
            "label": self.label,
        }


def _require_rest_point(k, pstar):
    residual = rest_point_residual(k, pstar)
    if residual > REST_TOL:
        raise NotARestPoint(f"rest-point residual {residual!r} exceeds {REST_TOL}")


def _candidates(k, pstar, spec, witnesses, samples):
    if samples is None:
        samples = sample_neighborhood(pstar, spec, kernel=k)
    return [q for q in [*samples, *witnesses] if variational_distance(q, pstar) > SKIP_DISTANCE]


def _margin_report(kind, k, pstar, spec, witnesses, samples, passes):
    _require_rest_point(k, pstar)
    qs = _candidates(k, pstar, spec, witnesses, samples)
    if not qs:
        return MarginReport(kind, None, None, None, MARGIN_TOL, 0)
    margins = np.array([margin(k, pstar, q) for q in qs])
    i = int(np.argmin(margins))
    return MarginReport(kind, float(margins[i]), qs[i], bool(passes(margins[i])), MARGIN_TOL, len(qs))


def test_strong_uninvadability(k, pstar, spec, witnesses=(), samples=None) -> MarginReport:
    """Minimum of ``E(P*, Q) - E(Q, Q)`` over sampled ``Q != P*``; passes if above ``MARGIN_TOL``."""
    return _margin_report("uninvadable", k, pstar, spec, witnesses, samples, lambda m: m > MARGIN_TOL)


def test_strong_unbeatability(k, pstar, spec, witnesses=(), samples=None) -> MarginReport:
    """As :func:`test_strong_uninvadability` but passes when the minimum is at least ``-MARGIN_TOL``."""
    return _margin_report("unbeatable", k, pstar, spec, witnesses, samples, lambda m: m >= -MARGIN_TOL)


# keep pytest from collecting these when imported into test modules
test_strong_uninvadability.__test__ = False
test_strong_unbeatability.__test__ = False


def negdef_ratio(k: PayoffKernel, pstar: DiscreteMeasure, q: DiscreteMeasure) -> float:
    return -frechet_form(k, pstar, q) / variational_distance(q, pstar) ** 2


@dataclass
class NegdefReport:
    c_estimate: float | None
    worst_sample: DiscreteMeasure | None
    verdict: str
    witness_ratios: list[float]
    tolerance: float
    n_evaluated: int

    def to_dict(self) -> dict:
        return {
            "c_estimate": self.c_estimate,
            "worst_sample": _records(self.worst_sample),
            "verdict": self.verdict,
            "witness_ratios": self.witness_ratios,
            "tolerance": self.tolerance,
            "n_evaluated": self.n_evaluated,
        }

    @property
    def passed(self) -> bool:
        return self.verdict == NEGDEF


def estimate_negdef_constant(k, pstar, spec, witnesses=(), samples=None) -> NegdefReport:
    """Smallest observed ``-form(Q) / ||Q - P*||**2`` over samples and witnesses.

    A positive minimum is consistent with the first-order (negative definite)
    condition; a witness with ratio zero refutes it.
    """
    _require_rest_point(k, pstar)
    qs = _candidates(k, pstar, spec, (), samples)
    ws = [q for q in witnesses if variational_distance(q, pstar) > SKIP_DISTANCE]
    witness_ratios = [negdef_ratio(k, pstar, q) for q in ws]
    pool = qs + ws
    if not pool:
        return NegdefReport(None, None, NOT_APPLICABLE, [], C_TOL, 0)
    ratios = [negdef_ratio(k, pstar, q) for q in qs] + witness_ratios
    i = int(np.argmin(ratios))
    c = float(ratios[i]) + 0.0  # normalize -0.0
    return NegdefReport(c, pool[i], NEGDEF if c > C_TOL else NOT_NEGDEF, witness_ratios, C_TOL, len(pool))


@dataclass
class CertificateReport:
    v_nonneg: bool
    v_zero_at_target: bool
    monotone_fraction: float
    strict_fraction: float
    pinsker_factor2: bool
    pinsker_unfactored_violations: int
    n_trajectories: int
    n_records: int
    omitted: str = "limit-interchange condition along t_n has no finite-sample check"

    @property
    def verdict(self) -> bool:
        return self.v_nonneg and self.v_zero_at_target and self.pinsker_factor2 and self.monotone_fraction == 1.0

    def to_dict(self) -> dict:
        return {
            "v_nonneg": self.v_nonneg,
            "v_zero_at_target": self.v_zero_at_target,
            "monotone_fraction": self.monotone_fraction,
            "strict_fraction": self.strict_fraction,
            "pinsker_factor2": self.pinsker_factor2,
            "pinsker_unfactored_violations": self.pinsker_unfactored_violations,
            "n_trajectories": self.n_trajectories,
            "n_records": self.n_records,
            "verdict": self.verdict,
            "omitted": self.omitted,
            "tolerances": {
                "v_nonneg": V_NONNEG_SLACK,
                "pinsker": PINSKER_SLACK,
                "monotone": MONOTONE_SLACK,
            },
        }


def verify_lyapunov_certificate(
    k: PayoffKernel, pstar: DiscreteMeasure, trajectories: list[Trajectory]
) -> CertificateReport:
    """Audit the recorded V and distance channels against the Lyapunov hypotheses.

    Checks positivity of V with V = 0 at the target, the comparison
    ``||Q - P*||**2 / 2 <= V`` and monotone decrease of V between records.
    """
    if kl_divergence(pstar, pstar) != 0.0:
        raise AssertionError("V(P*) must vanish")
    v_nonneg = v_zero = pinsker = True
    unfactored = pairs = monotone = strict = records = 0
    for tr in trajectories:
        if tr.v_values is None or tr.distances is None:
            raise MissingDiagnostics("trajectory was integrated without a target")
        if tr.target != pstar:
            raise ValueError("trajectory target differs from pstar")
        v, d = tr.v_values, tr.distances
        records += len(v)
        v_nonneg &= bool(np.all(v >= -V_NONNEG_SLACK))
        v_zero &= bool(np.all(v[d <= DROP_TOL] <= V_NONNEG_SLACK))
        pinsker &= bool(np.all(0.5 * d**2 <= v + PINSKER_SLACK))
        unfactored += int(np.sum(d**2 > v + PINSKER_SLACK))
        dv = np.diff(v)
        pairs += len(dv)
        monotone += int(np.sum(dv <= MONOTONE_SLACK))
        strict += int(np.sum(dv < 0))
    return CertificateReport(
        v_nonneg=v_nonneg,
        v_zero_at_target=v_zero,
        monotone_fraction=monotone / pairs if pairs else 1.0,
        strict_fraction=strict / pairs if pairs else 1.0,
        pinsker_factor2=pinsker,
        pinsker_unfactored_violations=unfactored,
        n_trajectories=len(trajectories),
        n_records=records,
    )


def lyapunov_slope_gap(k: PayoffKernel, pstar: DiscreteMeasure, tr: Trajectory) -> float:
    """Largest gap between the forward-difference slope of V and ``-margin(Q(t))``."""
    if tr.v_values is None:
        raise MissingDiagnostics("trajectory was integrated without a target")
    slopes = np.diff(tr.v_values) / np.diff(tr.times)
    margins = np.array([margin(k, pstar, tr.state(r)) for r in range(len(tr) - 1)])
    return float(np.max(np.abs(slopes + margins)))


@dataclass
class BasinReport:
    n_runs: int
    max_excursion: float
    max_growth: float
    max_initial_distance: float
    max_final_distance: float
    mean_final_distance: float
    min_final_distance: float
    final_tol: float
    trajectories: list[Trajectory] = field(default_factory=list, repr=False)

    @property
    def verdict(self) -> bool:
        return self.max_final_distance < self.final_tol

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "max_excursion": self.max_excursion,
            "max_growth": self.max_growth,
            "max_initial_distance": self.max_initial_distance,
            "final_distances": {
                "max": self.max_final_distance,
                "mean": self.mean_final_distance,
                "min": self.min_final_distance,
            },
            "final_tol": self.final_tol,
            "verdict": self.verdict,
        }


def basin_probe(
    k: PayoffKernel,
    pstar: DiscreteMeasure,
    spec: NeighborhoodSpec,
    cfg: IntegratorConfig,
    final_tol: float = 1e-3,
    samples: list[DiscreteMeasure] | None = None,
) -> BasinReport:
    """Integrate from every sampled start and summarize distances to ``pstar``.

    ``max_excursion`` is the largest distance seen on any run; ``max_growth``
    the largest rise above a run's starting distance.
    """
    spec.validate(pstar)
    if samples is None:
        samples = sample_neighborhood(pstar, spec, kernel=k)
    trajectories = integrate_many(k, samples, cfg, target=pstar)
    if not trajectories:
        return BasinReport(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, final_tol)
    excursions = np.array([tr.distances.max() for tr in trajectories])
    initial = np.array([tr.distances[0] for tr in trajectories])
    final = np.array([tr.distances[-1] for tr in trajectories])
    return BasinReport(
        n_runs=len(trajectories),
        max_excursion=float(excursions.max()),
        max_growth=float((excursions - initial).max()),
        max_initial_distance=float(initial.max()),
        max_final_distance=float(final.max()),
        mean_final_distance=float(final.mean()),
        min_final_distance=float(final.min()),
        final_tol=final_tol,
        trajectories=trajectories,
    )


@dataclass
class StabilityReport:
    """Collected results of whichever analyses were run; absent ones stay ``None``."""

    rest_residual: float | None = None
    uninvadable: MarginReport | None = None
    unbeatable: MarginReport | None = None
    negdef: NegdefReport | None = None
    certificate: CertificateReport | None = None
    basin: BasinReport | None = None
    basin_certificate: CertificateReport | None = None
    errors: list[str] = field(default_factory=list)

    def verdicts(self) -> dict[str, bool]:
        out = {}
        if self.rest_residual is not None:
            out["rest_point"] = self.rest_residual <= REST_TOL
        for name in ("uninvadable", "unbeatable"):
            rep = getattr(self, name)
            if rep is not None and rep.verdict is not None:
                out[name] = rep.verdict
        if self.negdef is not None and self.negdef.verdict != NOT_APPLICABLE:
            out["negdef"] = self.negdef.passed
        if self.certificate is not None:
            out["certificate"] = self.certificate.verdict
        if self.basin is not None:
            out["basin"] = self.basin.verdict
        if self.basin_certificate is not None:
            out["basin_certificate"] = self.basin_certificate.verdict
        return out

    def to_dict(self) -> dict:
        def maybe(rep):
            return None if rep is None else rep.to_dict()

        return {
            "rest_residual": self.rest_residual,
            "uninvadable": maybe(self.uninvadable),
            "unbeatable": maybe(self.unbeatable),
            "negdef": maybe(self.negdef),
            "certificate": maybe(self.certificate),
            "basin": maybe(self.basin),
            "basin_certificate": maybe(self.basin_certificate),
            "verdicts": self.verdicts(),
            "errors": list(self.errors),
            "tolerances": {
                "rest": REST_TOL,
                "margin": MARGIN_TOL,
                "negdef_c": C_TOL,
                "skip_distance": SKIP_DISTANCE,
            },
        }

