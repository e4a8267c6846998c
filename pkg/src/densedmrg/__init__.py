"""Dense tensor networks: MPS/MPO algebra, two-site DMRG and measurements."""

from .config import RunConfig, parse_config
from .decompositions import NO_TRUNCATION, TruncationSpec, eigen, lq, polar, qr, svd
from .dmrg import DmrgParams, DmrgReport, dmrg, entropy
from .ed import convert2mps, full_h, full_psi, krylov_ground
from .errors import (
    ConfigError,
    DecompositionError,
    FormatError,
    GroupingError,
    InternalStateError,
    ModelError,
    NormalizationError,
    PermutationError,
    ResourceError,
    ShapeError,
    SiteRangeError,
    StorageError,
    TensorNetworkError,
)
from .lanczos import lanczos
from .measure import (
    align_bond_signs,
    bond_spectrum,
    correlation,
    correlation_length,
    correlation_matrix,
    entanglement_profile,
    expect,
    expect_local,
    transfer_matrix,
)
from .models import (
    ModelSpec,
    add_pinning,
    build_mpo,
    fermion_ops,
    heisenberg2d_mpo,
    heisenberg_mpo,
    hubbard_mpo,
    operator_set,
    spin_ops,
    tfim_mpo,
)
from .network import (
    MPO,
    MPS,
    Environment,
    apply_local_ops,
    apply_mpo,
    canonicalize,
    ferro_state,
    large_mpo,
    large_mps,
    load_mpo,
    load_mps,
    make_env,
    make_mpo,
    move_oc,
    mps_product_state,
    rand_mps,
    staggered_state,
)
from .tensor import DenseTensor, contract, norm, permute, reshape_group, unreshape

__version__ = "0.1.0"
