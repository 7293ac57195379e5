"""Exact distances, invariants and constructions for finite metric measure spaces."""
from .boxdist import (BoxCertificate, Relation, box_exact, box_lower_bound, box_point_lower,
                      box_to_point, box_upper, box_upper_certificate, gromov_prokhorov,
                      max_coupling_mass_on)
from .construct import (GluedSpace, PathSample, TransformSpec, branch_family, discrete_net,
                        geodesic_dyadic, glue, interpolate_dominated, kuratowski, l_p_product,
                        midpoint, net_report, path_report, retraction_transform, transform)
from .core import (FiniteMMSpace, PointMap, diam, dominates, mm_isomorphic, one_point,
                   quotient_support, scale, validate_space)
from .errors import *  # noqa: F401,F403
from .invariants import (RealMeasure, gaussian_obs_diam, obs_diam_exact, obs_diam_lower,
                         obs_diam_total, partial_diam_line, partial_diam_space,
                         sphere_box_lower, sphere_concentration_ratio)
from .transport import (Coupling, MeasurePair, ky_fan, max_subtransport_mass, prokhorov)

__version__ = "0.1.0"
