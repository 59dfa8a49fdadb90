"""Classify the von Neumann algebra V*(Phi, Omega) of multiplication operators on Bergman spaces."""

__version__ = "0.1.0"

from .poly import Poly, PolyMap, parse_poly, parse_polymap, format_poly, jacobian_det  # noqa: E402
from .domain import Polydisk, Ball, Annulus, ClosedBall, Difference, Region, classify_point  # noqa: E402
from .fiber import solve_fiber, generic_fiber_count, is_proper_numeric  # noqa: E402
from .monodromy import compute_monodromy, decide_admissibility, detect_deck_group, track_path  # noqa: E402
from .bergman import BergmanModel, commutant_dimension, mult_matrix, monomial_norm_sq  # noqa: E402
from .classify import classify_vna, deformation_experiment, monomial_pair_classification  # noqa: E402
