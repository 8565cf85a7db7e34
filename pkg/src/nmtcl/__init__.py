"""Time-convolutionless dynamics of a two-level atom in a Lorentzian reservoir.

The generator of the reduced dynamics has poles in strong coupling; the
solvers here propagate through them, compare perturbative generators with
the exact one, and unravel the dynamics with non-Markovian quantum jumps.
"""

from .errors import (
    AtPole,
    DegenerateAmplitude,
    EmptyTargetClass,
    GridMismatch,
    NmtclError,
    NonPositiveParameter,
    NormViolation,
    NotStrongCoupling,
    PoleAtGridEnd,
    PositivityBreach,
    ProbePastPole,
    RegimeViolation,
    StepProbabilityOverflow,
    StepTooLarge,
)
from .model import (
    InitialState,
    PhysicalParams,
    QubitState,
    Regime,
    TimeGrid,
    correlation_kernel,
    density_from_amplitudes,
    make_params,
)
from .exact import (
    amplitude_derivative_exact,
    amplitude_exact,
    amplitude_zero,
    amplitude_zeros,
    decay_rate_exact,
    exact_density,
    generator_exact,
    rabi_rate,
)
from .generators import Generator, GeneratorKind, GeneratorSample, generator, poles, sample
from .volterra import (
    ExponentialKernel,
    generator_from_amplitude,
    lorentzian_kernel,
    solve_amplitude_ode,
    solve_volterra,
)
from .tcl_solver import SolveOptions, Trajectory, solve_tcl, solve_tcl_quadrature
from .nmqj import NMQJRun, nmqj_diagnostics, nmqj_run
from .analysis import (
    compare_trajectories,
    error_order_study,
    loglog_fit,
    residual_order_check,
    singular_time,
)

__version__ = "0.1.0"
