"""Numerical determinacy checks for multidimensional moment problems."""

__version__ = "0.1.0"

from .signedlog import SignedLog
from .errors import (
    CriterionError, ExprSyntaxError, ManifestError, MomentDetError, NegativeMassError,
    NonConvergedError, SingularGramError, SupportError, UnboundedError, UnsupportedOperation,
)
from .expr import Expression, eval_expression, parse_expression
from .measures import (
    Cone, Discrete, DensityExpr, Exponential1D, Gamma1D, GaussianProduct, LogNormal1D, Mixture,
    PerturbedLogNormal, ProductOf1D, Pushforward, SupportDescriptor, closed_form_moment, density_at,
    marginal_support, moment_matched_family, standard_normal,
)
from .quad import classify_tail, integrate, monte_carlo, tail_profile
from .series import classify_series
from .weights import (
    AffineImage, CompactSupport, ExpDecay, ExprWeight, RadialRho, RepeatedLog, Tensor,
    classify_quasianalytic, log_negativity_integral, sup_norm_sequence, weight_at,
)
from .moments import (
    MomentTable, absolute_moment, build_table, directional_moments, lambda_sequence, mixed_moment,
)
from .criteria import (
    CriterionSpec, DeterminacyVerdict, carleman_partial_sums, extended_carleman_check,
    integral_criterion, phi_pushforward, shohat_tamarkin_check, strengthen_to_determinate,
    symmetrize, verify_moment_relation,
)
from .density import (
    char_function, gram_matrix, orthonormalize, poly_projection_error, trig_projection_error,
)
from .manifest import parse_manifest
from .report import emit, run_manifest
