"""Complete non-CMC biconservative surfaces of revolution in R^3, S^3, H^3.

Pipeline: profile quadrature (rho0 and its inverse F) -> reflection gluing
to a complete profile on all of rho -> intrinsic metric Gamma^2 dtheta^2 +
drho^2 with its curvature identities -> moving-frame immersion into the
ambient space form, checked against the closed-form flat case.
"""

from ._kernels import backend
from .errors import (BiconsError, CoverageError, DomainError, ExportError,
                     InadmissibleParameterError, IntegrationFailureError,
                     IntegrationQualityError)
from .profile import (ProfileParams, ProfileSolution, RootPair, find_roots,
                      invert_rho0, potential_T, rho0, rho0_limits,
                      solve_profile)
from .gluing import (GluedProfile, GluingLattice, build_glued_profile,
                     derivative_F, eval_F, eval_Gamma, junction_smoothness_report,
                     junctions_in, lattice_point, reflect_rho_r)
from .geometry import (GluedMetric, ResidualReport, completeness_comparison,
                       first_integral_alpha, gauss_curvature,
                       geodesic_integrate, omega, random_geodesic_probes,
                       verify_bicons_pde, verify_curvature_ode,
                       verify_first_integral, verify_frame_relations,
                       verify_isothermal_form, verify_laplace_identity)
from .immersion import (AmbientModel, GridSpec, ImmersionGrid, ambient_model,
                        compare_to_oracle, explicit_immersion_eps0,
                        export_mesh, integrate_immersion, shape_operator,
                        verify_biconservative_tangency, verify_codazzi)

__version__ = "0.1.0"
