"""Numeric kernels with a compiled core and a pure-Python fallback.

The Cython build is selected at import when present; set
``CHIPFORGE_PURE_KERNELS=1`` to force the fallback (used by the
benchmark and the equivalence tests).
"""

from __future__ import annotations

import os

if os.environ.get("CHIPFORGE_PURE_KERNELS"):
    from chipforge._kernels._pure import matmul_cycles, trigram_embed

    BACKEND = "pure"
else:
    try:
        from chipforge._kernels._speedups import matmul_cycles, trigram_embed

        BACKEND = "compiled"
    except ImportError:
        from chipforge._kernels._pure import matmul_cycles, trigram_embed

        BACKEND = "pure"

__all__ = ["BACKEND", "matmul_cycles", "trigram_embed"]
