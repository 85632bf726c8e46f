"""Selects the compiled clique kernel when available, else the pure-Python one.

Set ``IRSROUTE_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _cliques_py

_compiled = None
if os.environ.get("IRSROUTE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ccliques as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def maximal_clique_masks(adj: list[int], backend: str | None = None) -> list[int]:
    """Maximal cliques as bitmasks; ``backend`` may force ``"python"`` or ``"cython"``."""
    use = backend or BACKEND
    if use == "cython":
        if _compiled is None:
            raise ImportError("compiled clique kernel is not built")
        if len(adj) <= 64:
            return _compiled.maximal_clique_masks(adj)
    return _cliques_py.maximal_clique_masks(adj)
