"""Finite-dimensional toolkit for C*-irreducible inclusions.

Modules, bottom-up: :mod:`matcore` (dense matrix substrate), :mod:`algebra`
(embedded subalgebras, commutants, expectations), :mod:`fullness` (relative
fullness and certificates), :mod:`orthogonality` (everywhere
non-orthogonality), :mod:`tower` (inductive-limit prefixes), :mod:`ksearch`
(the least-k search) and :mod:`cli`.
"""
__version__ = "0.1.0"

from .matcore import DEFAULT_TOL, ToleranceConfig  # noqa: E402
from .algebra import SubalgebraEmbedding, validate_embedding  # noqa: E402
from .fullness import FullnessCertificate, relatively_full, verify_certificate  # noqa: E402

__all__ = [
    "__version__", "DEFAULT_TOL", "ToleranceConfig", "SubalgebraEmbedding", "validate_embedding",
    "FullnessCertificate", "relatively_full", "verify_certificate",
]
