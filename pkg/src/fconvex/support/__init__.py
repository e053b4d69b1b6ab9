"""Support functions of F-convex sets: specifications, curvature, convexity, duality, hedgehogs."""

from .duality import dual, radial_function
from .geometry import (ConvexityReport, CurvatureData, check_convexity_pointwise, check_radial_convexity,
                       check_subadditivity, curvature, eval_h, extend_H, minkowski_sum, normal_representation,
                       scale, support_at_infinity)
from .hedgehog import HedgehogDecomposition, decompose_hedgehog
from .spec import (ClosedForm, ConeApex, Constant, Negate, NonDifferentiableError, PolyhedralMax, PowerCosh,
                   RadialProfile, Scale, Sum, SupportSpec, Tabulated, ball, elementary_profile, from_dict, from_json,
                   zero_mean_radius_profile)
