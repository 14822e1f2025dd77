"""Backend dispatch for the hot kernels.

VANETSYNC_BACKEND selects the implementation: "numba" (require numba),
"numpy" (pure numpy), or "auto" (default: numba when importable, else numpy).
Both backends expose the same functions; results agree to float tolerance.
"""

import os

from ..errors import ConfigurationError
from . import numpy_impl

_CHOICES = ("auto", "numba", "numpy")


def _load(requested: str):
    if requested not in _CHOICES:
        raise ConfigurationError(
            f"VANETSYNC_BACKEND must be one of {_CHOICES}, got {requested!r}"
        )
    if requested == "numpy":
        return numpy_impl
    try:
        from . import numba_impl
        return numba_impl
    except ImportError:
        if requested == "numba":
            raise ConfigurationError(
                "VANETSYNC_BACKEND=numba but numba is not importable"
            )
        return numpy_impl


def get_backend(name: str):
    """Explicitly load a backend module by name (for tests/benchmarks)."""
    return _load(name)


_impl = _load(os.environ.get("VANETSYNC_BACKEND", "auto").lower())

BACKEND_NAME = _impl.BACKEND_NAME
sweep_elevations = _impl.sweep_elevations
sector_visible = _impl.sector_visible
dop_accumulate = _impl.dop_accumulate
ar1_series = _impl.ar1_series
