"""Backend selection for the neighbour-sampling kernel.

The compiled extension is used when it imports and the graph has at most 64
nodes; setting ``KESBN_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback

try:
    from . import _ext
except ImportError:  # extension not built
    _ext = None

if os.environ.get("KESBN_PURE_PYTHON", "") not in ("", "0"):
    _ext = None

BACKEND = "compiled" if _ext is not None else "python"

uniforms_needed = _fallback.uniforms_needed


def sample_batch(parents, uniforms, n_pre, n_draws, cars, backend=None):
    """Draw ``n_draws`` inclusion-boundary neighbours of the graph ``parents``.

    Returns python lists ``(heads, old_masks, new_masks, neighbours)``; see
    :func:`kesbn._fallback.sample_batch`.
    """
    backend = backend or BACKEND
    use_ext = backend == "compiled" and _ext is not None and len(parents) <= 64
    if backend == "compiled" and _ext is None:
        raise RuntimeError("compiled backend requested but the extension is not built")
    if use_ext:
        u = np.ascontiguousarray(uniforms, dtype=np.float64)
        h, o, nw, nb = _ext.sample_batch(tuple(parents), u, n_pre, n_draws, cars)
        return h.tolist(), o.tolist(), nw.tolist(), [tuple(r) for r in nb.tolist()]
    return _fallback.sample_batch(parents, np.asarray(uniforms, dtype=float).tolist(),
                                  n_pre, n_draws, cars)
