"""Kernel backend selection.

The compiled extension (slwalk._core) is used when importable; the pure
numpy twin is the fallback.  Set SLWALK_BACKEND=py to force the fallback
or SLWALK_BACKEND=ext to require the extension (ImportError if missing).
Within one backend, results are bit-reproducible and independent of the
worker count; across backends they agree up to float associativity.
"""

import os

from . import pure

_choice = os.environ.get("SLWALK_BACKEND", "auto").lower()

if _choice == "py":
    _impl = pure
    BACKEND = "pure"
elif _choice == "ext":
    from .. import _core as _impl  # noqa: F401

    BACKEND = "ext"
else:
    try:
        from .. import _core as _impl  # type: ignore
        BACKEND = "ext"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

step_matrix_chains = _impl.step_matrix_chains
step_vector_chains = _impl.step_vector_chains
step_vector_chain_trace = _impl.step_vector_chain_trace
