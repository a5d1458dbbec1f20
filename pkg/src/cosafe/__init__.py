"""Confidence-aware safe control with an uncertainty-propagating observer."""

__version__ = "0.1.0"

from .controller import (ConfidenceMetric, SolverResult, SolverWeights,
                         grid_oracle, metric_and_gradient, solve_clf_cbf,
                         solve_tracking)
from .errors import (ConfigError, ConvergenceFailure, CosafeError,
                     EmptyFeasibleGrid, InfeasibleCBF, NearDegenerateEigenvalues,
                     NonFiniteDerivative, NotPositiveDefinite)
from .observer import (ObserverConfig, ObserverState, UncertaintyBoundsMonitor,
                       confidence_rate, monitor_update, observer_gain,
                       observer_rhs, observer_step, predict_confidence,
                       uncertainty_rate)
from .safety import (ErrorBoundConstants, InitialConditionReport, SafetySpec,
                     StabilitySpec, barrier_margin, cbf_row, clf_row,
                     obstacle_cbf, second_order_cbf, second_order_clf,
                     validate_initial_conditions)
from .sim import (DisturbanceSpec, EpisodeConfig, EpisodeLog, compute_metrics,
                  inject_disturbance, run_episode, settling_time)
from .systems import (AdmissibleSets, SystemModel, UnicycleGains,
                      dynamics_jacobian, second_order_system, unicycle_nominal,
                      unicycle_system, wrap_to_pi)
