"""recurlab: binary-tree admission, block entropies and non-recurrent pairs in symbolic processes."""

__version__ = "0.1.0"

from recurlab.errors import (  # noqa: E402
    ConditioningError,
    EntropyError,
    ModelError,
    NoCertificateError,
    ParameterError,
    RecurlabError,
    VerificationError,
)
from recurlab.kernels import BACKEND  # noqa: E402

__all__ = [
    "BACKEND",
    "ConditioningError",
    "EntropyError",
    "ModelError",
    "NoCertificateError",
    "ParameterError",
    "RecurlabError",
    "VerificationError",
    "__version__",
]
