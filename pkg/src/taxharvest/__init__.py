"""taxharvest: predator-prey dynamics of government tax-revenue harvesting.

A three-compartment model of informal-firm profit, formal-firm profit and
government revenue, with tooling for simulation, boundedness
certification, equilibrium location, local/global stability analysis,
optimal penalty control, and fiscal ratio reporting.
"""

from .control import (
    AdjointState,
    ControlSolution,
    adjoint_field,
    forward_backward_sweep,
    hamiltonian,
    optimal_u,
)
from .dynamics import (
    BoundednessCertificate,
    IntegratorOptions,
    StiffnessError,
    Trajectory,
    boundedness_certificate,
    integrate,
    integrate_controlled,
    integrate_rk4,
)
from .empirics import CompositionReport, FiscalSeries, composition, knn_impute, load_csv, save_csv
from .equilibria import (
    CubicCoefficients,
    EquilibriumReport,
    all_equilibria,
    closed_form_equilibria,
    cubic_coefficients,
    solve_E3,
    solve_coexistence,
)
from .model import ControlParams, Params, State, controlled_vector_field, jacobian, vector_field
from .stability import (
    LyapunovScanReport,
    PerturbationResult,
    StabilityVerdict,
    global_stability_predicates,
    local_stability,
    lyapunov_scan,
    perturbation_probe,
)

__version__ = "0.1.0"

__all__ = [
    "AdjointState",
    "BoundednessCertificate",
    "CompositionReport",
    "ControlParams",
    "ControlSolution",
    "CubicCoefficients",
    "EquilibriumReport",
    "FiscalSeries",
    "IntegratorOptions",
    "LyapunovScanReport",
    "Params",
    "PerturbationResult",
    "StabilityVerdict",
    "State",
    "StiffnessError",
    "Trajectory",
    "adjoint_field",
    "all_equilibria",
    "boundedness_certificate",
    "closed_form_equilibria",
    "composition",
    "controlled_vector_field",
    "cubic_coefficients",
    "forward_backward_sweep",
    "global_stability_predicates",
    "hamiltonian",
    "integrate",
    "integrate_controlled",
    "integrate_rk4",
    "jacobian",
    "knn_impute",
    "load_csv",
    "local_stability",
    "lyapunov_scan",
    "optimal_u",
    "perturbation_probe",
    "save_csv",
    "solve_E3",
    "solve_coexistence",
    "vector_field",
    "__version__",
]
