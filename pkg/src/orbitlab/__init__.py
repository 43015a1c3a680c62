"""orbitlab: numerical Lie theory and homogeneous geometry.

Structure-constant Lie algebras, Cartan/Iwasawa decompositions with
restricted roots, weighted determinants and volume densities, left-invariant
Ricci curvature and nilsoliton certification, with a deterministic JSON CLI.
"""

from .errors import (
    AlgorithmFailure,
    CartanValidationError,
    ClusteringError,
    ConditioningError,
    DegenerateError,
    FormatError,
    IndeterminateError,
    InputError,
    InputShapeError,
    JacobiError,
    NotRegularError,
    OrbitlabError,
    PreconditionError,
    StratumError,
)
from .geometry import CurvatureReport, MetricData, SolitonData
from .liealg import (
    LieAlgebraData,
    LinearMapData,
    Subspace,
    bracket_apply,
    derivations,
    direct_sum,
    is_derivation,
    killing_form,
    nilradical,
    simple_ideals,
    structure_invariants,
    subspace_bracket,
    subspace_operator,
)
from .semisimple import (
    AppendixCReport,
    CartanData,
    IwasawaData,
    builtin_algebra,
    iwasawa_assemble,
    iwasawa_decompose,
    maximal_abelian_subspace,
    restricted_roots,
    validate_cartan,
    verify_appendix_c,
)
from .volume import (
    InnerProductData,
    StratumLabel,
    TriangularGauge,
    WeightVector,
    beta_plus_from_beta,
    det_weighted,
    equivariance_check,
    gauge_lower_triangular,
    heisenberg_stratum_label,
    orbit_density_vN,
    parabolic_membership,
    tr_weighted,
    v_weighted,
    weights_from_label,
)

__version__ = "0.1.0"
