"""Tensor networks built from arithmetic circuits, for high-dimensional quadrature."""

from actn.network import ContractionReport, TensorNetwork, contract_exact
from actn.tensor import Tensor, TruncationSpec, contract, fuse, svd_split, unfuse

__all__ = [
    "ContractionReport",
    "Tensor",
    "TensorNetwork",
    "TruncationSpec",
    "contract",
    "contract_exact",
    "fuse",
    "svd_split",
    "unfuse",
]
__version__ = "0.1.0"
