"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting
``RECURLAB_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

if os.environ.get("RECURLAB_PURE_PYTHON", "") not in ("", "0"):
    from recurlab import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from recurlab import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        from recurlab import _kernels_py as _impl

        BACKEND = "python"

lcp_array = _impl.lcp_array
support_dp = _impl.support_dp
markov_sample = _impl.markov_sample
greedy_cover = _impl.greedy_cover

__all__ = ["BACKEND", "lcp_array", "support_dp", "markov_sample", "greedy_cover"]
