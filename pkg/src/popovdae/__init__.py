"""Linear-quadratic control of index-one descriptor systems via Popov operators."""
from .decomposition import (SpectralDecomposition, degenerate_semigroup,
                            spectral_decomposition, verify_semigroup_laws)
from .errors import *  # noqa: F401,F403
from .lqr import (InputMaps, LqrSolution, PopovAssembly, WeightSchedule,
                  assemble_io_operator, assemble_popov, assemble_psi,
                  build_assembly, coercivity_margin, evaluate_cost,
                  feedback_embedding, input_maps, output_feedback_neumann,
                  shift_transform, solve_finite_horizon, solve_infinite_horizon)
from .mild import decompose_inhomogeneity, mild_residual, mild_solution
from .models import (HeatParams, build_heat_dae, canonical_fixture,
                     verify_heat_resolvent)
from .pencil import (DescriptorSystem, Pencil, RegularityReport,
                     growth_bound_estimate, index_at_most_one, pseudo_resolvent,
                     regularity_report, resolvent, transfer_function,
                     verify_resolvent_identity)
from .signals import Signal, TimeGrid, Trajectory
from .stability import (StabilityReport, check_dissipativity, hinf_bound,
                        l2_decay, pseudo_resolvent_lyapunov, solve_lyapunov,
                        stability_verdict)

__version__ = "0.1.0"
