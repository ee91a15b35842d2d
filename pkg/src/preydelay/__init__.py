"""Stage-structured predator-prey dynamics with a state-dependent maturation delay.

The package simulates a logistic prey coupled to a two-stage predator whose
maturation time grows with the mature stock, and verifies the system's
qualitative behavior numerically: permanence exactly when the predator net
reproduction number exceeds one, eventual boundedness, linearized stability
of each equilibrium, and global attraction of the coexistence state under
explicit interference conditions.
"""

from .delays import DelayFunction, constant_delay, exp_delay, make_delay, saturating_delay
from .engine import (IntegrationError, LagDomainError, PositivityViolation,
                     State, StepperConfig, StepSizeUnderflow, Trajectory,
                     default_stepper, export_csv, integrate,
                     integrate_scalar_sdtd, lag_times, lagged_lookup, rhs,
                     yj_integral)
from .equilibria import (Equilibrium, EquilibriumKind, NoConvergenceError,
                         boundary_equilibria, solve_coexistence,
                         steady_state_residual, yj_star)
from .model import (HistoryConsistencyWarning, HistoryFunction, ModelParams,
                    ModelSpec, ValidationReport, boundedness_limit,
                    consistent_history, constant_history,
                    constant_plus_sine_history, correction_factor,
                    history_consistency_error, reproduction_number,
                    tabulated_history, validate)
from .responses import (FunctionalResponse, ResponseKind,
                        beddington_deangelis, crowley_martin, eval_response,
                        holling1, holling2, holling3, ivlev, linear,
                        make_response, power_law, saturation)
from .stability import (ConditionReport, LinearizationCoeffs, QuarticReport,
                        QuasiPolynomial, StabilityVerdict, Verdict,
                        WindingError, characteristic_eval,
                        check_global_conditions, classify_equilibrium,
                        linearize_at, quartic_classify, quasi_polynomial,
                        rightmost_abscissa)
from .analysis import (BoundednessCertificate, BracketSequences,
                       ComparisonReport, ConvergenceReport, DichotomyVerdict,
                       InconclusiveError, ScalarLimitResult,
                       boundedness_certificate, comparison_probe,
                       extrapolated_limits, global_attraction_probe,
                       monotone_bounds, permanence_probe, scalar_fixed_point,
                       scalar_limit, spread_histories)

__version__ = "0.1.0"
