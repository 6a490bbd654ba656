"""Modal-collocation and SBP operators on triangles, with DG-equivalence experiments."""

from . import basis, densela, disc, mesh, operators, quadrature
from .operators import (
    OperatorError,
    OperatorSet,
    build_lps,
    build_mc,
    build_mc_general,
    build_sbp_minnorm,
    build_upwind,
    export_json,
    import_json,
    nodal_to_mc,
    nullspace,
    verify_operator,
)
from .quadrature import collapsed_tri_rule, liu_4c_rule, tri_edge_rules

__version__ = "0.1.0"
