"""Backend selection for the hot kernels.

The compiled extension ``wim._ckernels`` is used when it imports; otherwise,
or when ``WIM_PURE_PYTHON=1`` is set, the numpy fallback in
``wim._kernels_py`` is used.  Both expose identical functions.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and os.environ.get("WIM_PURE_PYTHON", "") not in ("1", "true"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]

bipartite_labelings = _impl.bipartite_labelings
phi_value = _impl.phi_value
minimax_value = _impl.minimax_value
dd_adjacent_pairs = _impl.dd_adjacent_pairs
clamped_minimax = _impl.clamped_minimax


def get_backend(name: str | None = None):
    """Return the kernel module named ``name`` (default: the active one)."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}"
        ) from None
