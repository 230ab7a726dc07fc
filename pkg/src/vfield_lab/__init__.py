"""Volume, curvature and index computations for unit vector fields on the twice-punctured 2-sphere."""

from .curvature import (
    PARALLEL_CURVATURE_SIGN,
    CurvaturePair,
    connection_form,
    curvatures_closed_form,
    curvatures_extrinsic,
    theta_directional,
)
from .index import IndexReport, index_by_connection_form, index_by_winding, index_pair
from .loxodrome import RhumbTrace, make_loxodromic_field, make_test_field, random_smooth_field, trace_rhumb
from .sphere_core import AngleField, FrameSample, SphericalPoint, embed, frame_at, unembed
from .varmin import MinimizeReport, ThetaGrid, grid_gradient, grid_objective, loxodromy_defect, minimize
from .volume import (
    IntegrationDomain,
    SharpnessResidual,
    lower_bound_s2,
    lower_bound_s3,
    sharpness_residuals,
    volume_band,
    volume_integrand,
    volume_total,
)

__version__ = "0.1.0"
