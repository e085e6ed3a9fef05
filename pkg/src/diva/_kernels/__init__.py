"""Hot-kernel dispatch: compiled extension when built, pure fallback otherwise.

Set DIVA_PURE_PYTHON=1 to force the fallback (used by the kernel parity
tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("DIVA_PURE_PYTHON", "").strip() in ("1", "true", "yes"):
    from . import _pure as impl
else:
    try:
        from . import _native as impl  # type: ignore[no-redef]
    except ImportError:
        from . import _pure as impl  # type: ignore[no-redef]

fnv1a64 = impl.fnv1a64
hashed_ngram_counts = impl.hashed_ngram_counts
bm25_accumulate = impl.bm25_accumulate


def implementation_name() -> str:
    """Which kernel implementation is active ("native" or "pure")."""
    return impl.IMPLEMENTATION
