"""vertexope: exact symbolic engine for (hbar-adic) vertex algebras, vertex
Poisson algebras, and chiral Hamiltonian reduction, with verification suites
for the Bershadsky-Polyakov algebra and the sl3 Slodowy slice charts."""

from .scalar import Scalar, ScalarContext, scalar_arith, specialize_k
from .state import Generator, GeneratorTable, State
from .vertex import VertexAlgebra, tensor

__all__ = [
    "Scalar", "ScalarContext", "scalar_arith", "specialize_k",
    "Generator", "GeneratorTable", "State", "VertexAlgebra", "tensor",
]

__version__ = "0.1.0"
