"""Two-sided numerical estimates for p-compact, p-summing and p-nuclear operator norms."""

from opideal.atlas import LimitOrderQuery, limit_order_formula, limit_order_summing
from opideal.config import RunConfig
from opideal.estimate import NormEstimate
from opideal.kompact import kappa_norm, mp_of_finite_set, qn_upper
from opideal.nuclear import check_ell1_identity, nuclear_dp, nuclear_gp
from opideal.spaces import SpaceSpec, Vector, VectorSequence
from opideal.summing import OperatorMatrix, operator_norm, summing_norm

__all__ = [
    "LimitOrderQuery", "NormEstimate", "OperatorMatrix", "RunConfig", "SpaceSpec", "Vector",
    "VectorSequence", "check_ell1_identity", "kappa_norm", "limit_order_formula",
    "limit_order_summing", "mp_of_finite_set", "nuclear_dp", "nuclear_gp", "operator_norm",
    "qn_upper", "summing_norm",
]
__version__ = "0.1.0"
