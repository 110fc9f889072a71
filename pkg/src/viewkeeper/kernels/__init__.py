"""Hot loops of the relational evaluator.

The Cython extension ``_ckernels`` is used when it was built; otherwise the
pure-Python ``_pykernels`` module is. Set ``VIEWKEEPER_PURE_PYTHON=1`` to force
the fallback. ``BACKEND`` names whichever was selected.
"""

from __future__ import annotations

import os

from . import _pykernels as python

compiled = None
if not os.environ.get("VIEWKEEPER_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

key_set = _impl.key_set
project_distinct = _impl.project_distinct
semijoin = _impl.semijoin
hash_join = _impl.hash_join
filter_equal = _impl.filter_equal

__all__ = [
    "BACKEND",
    "compiled",
    "python",
    "key_set",
    "project_distinct",
    "semijoin",
    "hash_join",
    "filter_equal",
]
