"""Evolution operators for singularly non-autonomous parabolic problems.

The package builds, at dense-matrix scale, the machinery needed to solve

    u'(t) - A(t) u(t) = f(t),   0 < t <= T,

when the generator family A(t) = B + C(t)/t^k blows up at the origin:
sectoriality certification, contour-integral semigroups and fractional
powers, structural hypothesis checks for the singular family, the
two-parameter evolution operator U(t, s) by three independent routes,
singular Hoelder norms with maximal-regularity verification, and a
space-time wedge diffusion problem solved end to end.
"""

from sevop.errors import (
    DegenerateMesh,
    DivergentTail,
    DomainError,
    EigenFailure,
    EmptyGrid,
    InterpolationOutOfRange,
    KernelBlowup,
    MissingBlock,
    NearSingular,
    NoContraction,
    QuadratureDivergence,
    SevopError,
    StepperStall,
)
from sevop.linops import DenseOperator, SectorCertificate, certify_sectorial, resolvent, spectral_bound
from sevop.semigroup import (
    ContourSpec,
    DecayReport,
    decay_report,
    exp_semigroup,
    frac_power,
    frac_power_inv,
    interp_seminorm,
    semigroup_difference_bound,
    verify_integral_identity,
)
from sevop.family import HypothesisReport, SingularFamily, check_hypotheses, scan_rho
from sevop.evolution import (
    EvolutionGrid,
    construct_fixedpoint,
    construct_ode,
    construct_volterra,
    counterexample_scan,
    verify_singular_bounds,
)
from sevop.cauchy import GridFunction, HolderReport, embed_check, holder_norm, solve_scp, verify_maxreg
from sevop.wedge import (
    ModeOperatorFamily,
    WedgeProblem,
    assemble_mode_family,
    lift_dirichlet,
    lift_neumann,
    pull_back,
    residual_check,
    rhs_modes,
    solve_wedge,
)

__version__ = "0.1.0"
