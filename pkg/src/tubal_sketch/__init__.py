"""Low tubal-rank tensor approximation by two-sided randomized sketching."""

from .tensor_core import (
    Transform,
    TSVDFactors,
    make_dft,
    make_dct,
    make_identity,
    make_u_transform,
    frob_norm,
    lprod,
    tprod_circ,
    conj_transpose,
    identity_tensor,
    tsvd,
    slice_singular_values,
    singular_values,
    tubal_rank,
    tail_energy,
)
from .sketch_ops import (
    SeedStream,
    fwht,
    gaussian_projection,
    srht,
    count_sketch,
    OperatorSet,
    make_operator_set,
    compute_sketches,
)
from .lowrank import (
    FactoredApprox,
    MethodSpec,
    METHOD_IDS,
    l_trp_sketch,
    sketch_pi,
    power_iterate,
    reconstruct,
    truncated_tsvd,
    rt_svd,
    t_sketch,
    run_method,
)
from .analysis import (
    rel_error,
    psnr,
    BoundReport,
    expected_error_bound,
    expected_error_bound_power,
    mc_check_error_bound,
    mc_pinv_product_ratio,
    mc_core_error_split,
    subspace_errors,
    spectrum,
)
from .data_io import (
    FormatError,
    PolyDecaySpec,
    poly_decay,
    add_noise,
    read_tns,
    write_tns,
    read_ppm,
    write_ppm,
    read_pgm,
    write_pgm,
    read_pgm_stack,
)

__version__ = "0.1.0"
