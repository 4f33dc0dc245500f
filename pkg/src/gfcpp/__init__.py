"""Compound Poisson processes on inverse-subordinator clocks.

Simulation, closed-form and semi-analytic moments, and numerical checks of
the generalized fractional equations these processes satisfy.
"""

__version__ = "0.1.0"

from .specfun import (  # noqa: E402
    InverseGaussian,
    LevyTail,
    Stable,
    TemperedStable,
    bernstein_eval,
    incomplete_gamma_lower,
    incomplete_gamma_upper,
    laplace_inverse_clock,
    levy_tail_eval,
    mean_inverse_subordinator,
    mittag_leffler,
)
from .rng import RngStream  # noqa: E402
from .subordinators import (  # noqa: E402
    MonotonePath,
    inverse_path,
    sample_inverse_at,
    subordinator_path,
)
from .jumps import (  # noqa: E402
    BernsteinType,
    CenteredTwoPoint,
    DiscreteUniform,
    Exponential,
    Logarithmic,
    MittagLeffler,
    TemperedMittagLeffler,
    TruncatedGeometric,
    jump_lt,
    jump_moments,
    sample_jump,
)
from .processes import (  # noqa: E402
    EventPath,
    ProcessSpec,
    StableAtExpCPP,
    SubordinatorAtExpCPP,
    TemperedStableAtExpCPP,
    cpp_pmf,
    gfcpp_pmf_mc,
    sample_values,
    simulate_cpp,
    simulate_gfcpp,
    simulate_representation,
)
from .analytics import (  # noqa: E402
    MomentReport,
    analytic_moments,
    empirical_laplace,
    empirical_moments,
    ks_two_sample,
    lrd_slope,
    martingale_test,
)
from .fde import KernelQuadrature, cd_derivative, dde_residual, rl_derivative  # noqa: E402

__all__ = [
    "__version__",
    "InverseGaussian",
    "LevyTail",
    "Stable",
    "TemperedStable",
    "bernstein_eval",
    "incomplete_gamma_lower",
    "incomplete_gamma_upper",
    "laplace_inverse_clock",
    "levy_tail_eval",
    "mean_inverse_subordinator",
    "mittag_leffler",
    "MonotonePath",
    "inverse_path",
    "sample_inverse_at",
    "subordinator_path",
    "BernsteinType",
    "CenteredTwoPoint",
    "DiscreteUniform",
    "Exponential",
    "Logarithmic",
    "MittagLeffler",
    "TemperedMittagLeffler",
    "TruncatedGeometric",
    "jump_lt",
    "jump_moments",
    "sample_jump",
    "EventPath",
    "ProcessSpec",
    "StableAtExpCPP",
    "SubordinatorAtExpCPP",
    "TemperedStableAtExpCPP",
    "cpp_pmf",
    "gfcpp_pmf_mc",
    "sample_values",
    "simulate_cpp",
    "simulate_gfcpp",
    "simulate_representation",
    "MomentReport",
    "analytic_moments",
    "empirical_laplace",
    "empirical_moments",
    "ks_two_sample",
    "lrd_slope",
    "martingale_test",
    "RngStream",
    "KernelQuadrature",
    "cd_derivative",
    "dde_residual",
    "rl_derivative",
]
