"""Replicator dynamics and stability checks for finitely-supported population states."""

from .dynamics import IntegratorConfig, Trajectory, integrate, replicator_rhs, rest_point_residual
from .games import (
    AffineQuadratic,
    GridTable,
    HarvestPiecewise,
    Linear2mzw,
    PayoffKernel,
    expected_payoff,
    frechet_form,
    make_kernel,
    mean_payoff,
    payoff,
    success,
)
from .measures import (
    DiscreteMeasure,
    StrategySpace,
    canonicalize,
    dirac,
    kl_divergence,
    lebesgue_decompose,
    pinsker_gap,
    variational_distance,
)
from .stability import (
    NeighborhoodSpec,
    StabilityReport,
    basin_probe,
    estimate_negdef_constant,
    sample_neighborhood,
    test_strong_unbeatability,
    test_strong_uninvadability,
    verify_lyapunov_certificate,
)

__version__ = "0.1.0"
