"""Hybrid measure differential equations: Kurzweil-Stieltjes integration, solvers and diagnostics."""
from .regulated import (
    DomainError,
    RegulatedPath,
    StieltjesIntegrator,
    TimeGrid,
    approximate_by_steps,
    eval_path,
    one_sided_limits,
    regrid,
    restrict_path,
    sup_norm,
    total_variation,
    uniform_dist,
    union_grid,
)
from .integral import (
    EvaluationError,
    FieldSpec,
    TaggedPartition,
    compose_integrand,
    dominated_convergence_check,
    fine_partition_oracle,
    indefinite_integral,
    ks_integral,
)
from .solver import (
    CertificateResult,
    HMDEProblem,
    SolveReport,
    SolverOptions,
    apply_A,
    apply_B,
    certificate_A,
    certificate_Astar,
    certificate_margin,
    derivative_field,
    implicit_point_solve,
    residual,
    solve_forward,
)
from .frontends import ImpulsiveSpec, TimeScaleSpec, from_impulsive, from_timescale, restrict_solution
from .asymptotics import (
    HorizonProblem,
    bounded_condition_check,
    chain_solve,
    composition_sap_check,
    generate_example_path,
    sap_profile,
)
from .dependence import ParamSequence, condition_I_estimate, dependence_run, hypothesis_check

__version__ = "0.1.0"
