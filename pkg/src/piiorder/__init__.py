"""Stochastic ordering of processes with independent increments.

Characteristic triplets, kernel-level order conditions, ordered pathwise
couplings (tail-inverse, single-cut, additive convex), Monte-Carlo
verification, and a CLI front end.
"""

from .characteristics import (
    FixedJumpEntry,
    FixedJumpSchedule,
    PIICharacteristics,
    TruncationFunction,
    align_pair,
    combine,
    decompose,
    h_compensator,
    load_process_spec,
    parse_process_spec,
    stop_loss,
    tail,
)
from .convex_coupling import AddOnCharacteristics, build_addon, couple_fixed_jumps, simulate_convex_coupled
from .cut_coupling import CutCouplingPlan, build_plan, empirical_compensator, simulate_cut_coupled
from .ito_coupling import ItoMap, ito_map, pushforward_check, sample_reference, simulate_coupled, truncation_for
from .jumps import DiscreteJumps, ExponentialJumps, JumpSizeDistribution, UniformJumps, point_mass
from .kernels import (
    CGMYKernel,
    CompoundPoissonKernel,
    JumpKernel,
    SuperposedKernel,
    TabulatedKernel,
    zero_kernel,
)
from .order_conditions import (
    CutPoint,
    Grid,
    OrderReport,
    TruncationLadder,
    build_grid,
    check_convex_majorization,
    check_cut,
    check_cx,
    check_drift,
    check_icx,
    check_st_tails,
    default_horizon,
    kernel_order_defn_check,
)
from .piecewise import PiecewiseLinear, TimeMeasure
from .rng import substream
from .sampling import (
    CoupledPathSet,
    PathSet,
    compensator_curve,
    sample_increments,
    simulate_direct,
)
from .verify import (
    IndicatorStep,
    InterpolationResult,
    MCResult,
    OrderTestReport,
    PiecewiseLinearTestFunction,
    TestFunctionFamily,
    brute_force_oracle,
    estimate,
    exact_marginal_expectation,
    inf_convolution,
    interpolation_check,
    mc_order_test,
    small_time_rate,
)

__version__ = "0.1.0"

__all__ = [
    "AddOnCharacteristics",
    "CGMYKernel",
    "CompoundPoissonKernel",
    "CoupledPathSet",
    "CutCouplingPlan",
    "CutPoint",
    "DiscreteJumps",
    "ExponentialJumps",
    "FixedJumpEntry",
    "FixedJumpSchedule",
    "Grid",
    "IndicatorStep",
    "InterpolationResult",
    "ItoMap",
    "JumpKernel",
    "JumpSizeDistribution",
    "MCResult",
    "OrderReport",
    "OrderTestReport",
    "PIICharacteristics",
    "PathSet",
    "PiecewiseLinear",
    "PiecewiseLinearTestFunction",
    "SuperposedKernel",
    "TabulatedKernel",
    "TestFunctionFamily",
    "TimeMeasure",
    "TruncationFunction",
    "TruncationLadder",
    "UniformJumps",
    "align_pair",
    "build_addon",
    "build_grid",
    "build_plan",
    "check_convex_majorization",
    "check_cut",
    "check_cx",
    "check_drift",
    "check_icx",
    "check_st_tails",
    "combine",
    "compensator_curve",
    "couple_fixed_jumps",
    "decompose",
    "default_horizon",
    "empirical_compensator",
    "estimate",
    "exact_marginal_expectation",
    "h_compensator",
    "inf_convolution",
    "interpolation_check",
    "ito_map",
    "kernel_order_defn_check",
    "load_process_spec",
    "mc_order_test",
    "parse_process_spec",
    "point_mass",
    "pushforward_check",
    "sample_increments",
    "sample_reference",
    "simulate_convex_coupled",
    "simulate_coupled",
    "simulate_cut_coupled",
    "simulate_direct",
    "small_time_rate",
    "stop_loss",
    "brute_force_oracle",
    "substream",
    "tail",
    "truncation_for",
    "zero_kernel",
]
