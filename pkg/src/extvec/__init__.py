"""Extended-vector algebra and rigid-body mechanics on flat affine space.

The base space is flat and n-dimensional; every tensor carries one extra
affine slot whose transport encodes the position of the anchor point.
Submodules:

* ``core``     metrics, frames, transport, tensor algebra
* ``motion``   motion tensors of the isometry group and their generators
* ``rigid``    point masses, velocity bivectors, inertia, momentum, forces
* ``fields``   polynomial fields and the bivector directional derivative
* ``lagrange`` Lagrangians, their bivector derivative, force identities
* ``cli``      command-line front end (simulate / verify / derive / transform)
"""

from .core import (
    BivectorSplit,
    ExtTensor,
    Frame,
    FrameKind,
    Metric,
    basis_vector,
    bivector_join,
    bivector_split,
    contravariant_matrix,
    dual3,
    euclidean3,
    ext_covector,
    ext_vector,
    g_pair,
    levi_civita3,
    lift_base_vector,
    minkowski4,
    o_frame,
    p_frame,
    theta_g,
    transport_matrix,
    transport_tensor,
    transport_vector,
    undual3,
)
from .errors import (
    ConfigError,
    ContractViolation,
    ExtVecError,
    SchemaError,
    UnsupportedDimension,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "BivectorSplit",
    "ExtTensor",
    "Frame",
    "FrameKind",
    "Metric",
    "basis_vector",
    "bivector_join",
    "bivector_split",
    "contravariant_matrix",
    "dual3",
    "euclidean3",
    "ext_covector",
    "ext_vector",
    "g_pair",
    "levi_civita3",
    "lift_base_vector",
    "minkowski4",
    "o_frame",
    "p_frame",
    "theta_g",
    "transport_matrix",
    "transport_tensor",
    "transport_vector",
    "undual3",
    "ConfigError",
    "ContractViolation",
    "ExtVecError",
    "SchemaError",
    "UnsupportedDimension",
    "ValidationError",
    "__version__",
]
