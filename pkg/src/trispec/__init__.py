"""Spectral analysis of a three-particle lattice system with rank-one
pair interactions: fiber determinants, essential-spectrum bands,
eigenvalue counting below the spectrum, and the discrete-spectrum
asymptotics constant.
"""

from .errors import ConfigError, DomainError, NumericalError, TrispecError
from .models import (FormFactor, HessianBlocks, ModelSpec, cos_form_factor,
                     estimate_hessian_blocks, eval_dispersion,
                     make_reference_model, make_form_factor,
                     reference_cos_model, reference_dispersion,
                     reference_mixed_model, reference_sin_model,
                     sin_form_factor, verify_hypotheses)
from .torus import (QuadratureResult, UniformGrid, integrate_near_singular,
                    integrate_smooth, integrate_with_quadratic_singularity,
                    normalize_angles)
from .friedrichs import (BoundStateBranch, SliceExtrema, ThresholdClass,
                         bound_state, bound_state_branch, classify_threshold,
                         delta, in_coupling_region, lambda_of, mu_max,
                         mu_zero, slice_extrema, threshold_expansion_check,
                         zero_eigenvalue_quadratic_check)
from .spectrum import (EssentialSpectrum, SpectralBand, essential_spectrum,
                       global_max_energy, two_particle_band)
from .counting import (CountResult, KernelBlock, assemble_block,
                       count_above_one, count_schedule, eigenvalue_count_N,
                       resolution_flagged)
from .efimov import (EfimovEstimate, SobolevParams, efimov_constant,
                     fit_nz_slope, lower_bound_constant, s_hat_spectrum,
                     s_r_count, sobolev_params, u_of_lambda)
from .config import (CouplingSpec, ExperimentConfig, build_model,
                     compile_expression, parse_config, resolve_couplings)

__version__ = "0.1.0"
