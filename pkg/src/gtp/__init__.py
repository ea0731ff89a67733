"""Equivariant tensor products of spherical-harmonic features through 2D FFTs."""

from .conversion import (
    ConversionTable,
    FourierCoeffs2D,
    build_conversion_table,
    fourier_to_sh,
    get_table,
    sh_to_fourier,
    sh_to_fourier_sparse_filter,
)
from .convolution import EdgeGeometry, aggregate_messages, edge_frame, equiv_convolution
from .errors import (
    CacheFormatError,
    CapacityError,
    DegenerateEdgeError,
    DomainError,
    NumericalConsistencyError,
)
from .many_body import multi_tp, self_product
from .so3 import (
    clebsch_gordan,
    eval_real_sh,
    eval_sh_vector,
    gaunt_coefficient,
    rotation_to_y_axis,
    wigner_3j,
    wigner_d_blocks,
    wigner_d_matrix,
)
from .tensor_product import (
    conv2d_fft,
    gaunt_full_tp,
    gaunt_single_tp,
    gaunt_tp_batch,
    gaunt_weighted_tp,
)

__version__ = "0.1.0"

__all__ = [
    "CacheFormatError",
    "CapacityError",
    "ConversionTable",
    "DegenerateEdgeError",
    "DomainError",
    "EdgeGeometry",
    "FourierCoeffs2D",
    "NumericalConsistencyError",
    "aggregate_messages",
    "build_conversion_table",
    "clebsch_gordan",
    "conv2d_fft",
    "edge_frame",
    "equiv_convolution",
    "eval_real_sh",
    "eval_sh_vector",
    "fourier_to_sh",
    "gaunt_coefficient",
    "gaunt_full_tp",
    "gaunt_single_tp",
    "gaunt_tp_batch",
    "gaunt_weighted_tp",
    "get_table",
    "multi_tp",
    "rotation_to_y_axis",
    "self_product",
    "sh_to_fourier",
    "sh_to_fourier_sparse_filter",
    "wigner_3j",
    "wigner_d_blocks",
    "wigner_d_matrix",
]
