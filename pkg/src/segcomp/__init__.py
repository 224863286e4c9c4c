"""Steady states of strong-competition predator-prey systems on box domains.

The package marches an implicit-explicit scheme to positive equilibria of an
(N+1)-component reaction-diffusion system with Neumann boundary conditions,
continues them toward the strong-competition limit, and checks the resulting
states against a battery of analytic bounds (uniform caps, segregation rates,
eigenvalue and counting estimates, exponential interface decay).
"""

from .analysis import (BoundReport, ComplementarityReport, DecayFit,
                       EigenvalueRecord, IsolationReport, SegregationReport,
                       SupportReport, SurvivorReport, check_linf_bounds,
                       complementarity_check, cosine_test_functions, decay_fit,
                       default_threshold, faber_krahn_check, holder_seminorm,
                       segregation_report, support_and_nodal, survivor_count,
                       weighted_sum_holder, zero_isolation_probe)
from .errors import (AdmissibilityError, BlowUpError, ConfigError,
                     EmptySupportError, IsolationViolation, SegcompError,
                     SingularJacobianError, SnapshotError, StagnationError,
                     StepError, StructuralError)
from .grid import (Grid, ScalarField, SupportMask, ball_nodes, grad_inner,
                   integrate, lambda1_restricted, laplacian_neumann)
from .io import (AnalysisSettings, ConfigDocument, InitialSpec, apply_overrides,
                 build_config, parse_config, read_snapshot, write_report,
                 write_snapshot, write_table)
from .model import (Admissibility, DerivedConstants, ModelParams,
                    constant_single_species_state, derived_constants,
                    nhat_bound, params_hash, reaction_u, reaction_w,
                    validate_uniform)
from .solver import (ContinuationTrace, FieldSet, SolveReport, SolveSettings,
                     continue_in_beta, imex_step, march_to_steady,
                     newton_refine, residual_fields, residual_norm)

__version__ = "0.1.0"
