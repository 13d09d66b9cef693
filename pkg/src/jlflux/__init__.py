"""Singular solutions, weighted spectra and decay rates for a degenerate
elliptic problem with nonlinear boundary flux.

The problem is ``-div(x_n^a grad u) = 0`` in the upper half space with
``-lim x_n^a u_{x_n} = u^q`` on the boundary.  In polar and cylinder
variables it reduces to an angular Sturm-Liouville problem on
``[0, pi/2]`` with the measure ``sin^(n-2) cos^a dtheta`` and to a damped
wave-type equation in ``t = ln r``.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketError,
    ConsistencyError,
    ConvergenceError,
    FitError,
    IntegratorOverflow,
    JLFluxError,
    NewtonDivergence,
    NumericalError,
    ParameterError,
    PositivityError,
    PreconditionError,
    QuadratureError,
)
from .params import DerivedConstants, ProblemParams, derive  # noqa: E402
from .quadrature import (  # noqa: E402
    WeightedMeasure,
    gauss_jacobi,
    inner_product,
    lemma1_gap,
    norm,
    total_mass_exact,
    weighted_integral,
)
from .angular import AngularGrid, AngularProfile, integrate_angular, singular_profile  # noqa: E402
from .spectrum import (  # noqa: E402
    EigenPair,
    compute_Ca,
    eigenpairs,
    flux_mismatch,
    gram_matrix,
    rayleigh_quotient,
)
from .classifier import (  # noqa: E402
    GAnalysis,
    JLClass,
    JLReport,
    critical_exponent,
    g_analysis,
    jl_classify,
    modal_roots,
)
from .modal import (  # noqa: E402
    DecayFit,
    FitModel,
    ModalTrajectory,
    duhamel_solution,
    fit_decay,
    fit_oscillation,
    nonlinearity_g,
    ode_direct,
    vbar_residual,
)
from .cylinder import (  # noqa: E402
    AngularFE,
    CylinderField,
    CylinderGrid,
    CylinderSetup,
    EnergyTrace,
    decay_sup,
    discrete_modes,
    energy_trace,
    project_modes,
    scale_physical,
    scaling_shift,
    solve_linearized,
    solve_nonlinear,
    to_cylinder,
    to_physical,
)

__all__ = [name for name in dir() if not name.startswith("_")]
