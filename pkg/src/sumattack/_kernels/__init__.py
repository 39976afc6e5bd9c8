"""Hot kernels with a compiled core and a pure-Python fallback.

The token-LCS dynamic program is the inner loop of both inclusion detection
and ROUGE-L, and runs once per (summary sentence, lead sentence) pair for
every cluster and attack, so it pays to compile it. Selection happens once
at import: the Cython extension if it built, otherwise the pure-Python
implementation. Set SUMATTACK_PURE=1 to force the fallback (used by the
benchmark to compare both).
"""

import os

import numpy as np

if os.environ.get("SUMATTACK_PURE") == "1":
    from sumattack._kernels._pylcs import lcs_length as _lcs_ids

    KERNEL_BACKEND = "python"
else:
    try:
        from sumattack._kernels._lcs import lcs_length as _lcs_ids

        KERNEL_BACKEND = "cython"
    except ImportError:
        from sumattack._kernels._pylcs import lcs_length as _lcs_ids

        KERNEL_BACKEND = "python"

__all__ = ["KERNEL_BACKEND", "lcs_ids", "lcs_tokens"]


def lcs_ids(a, b) -> int:
    """LCS length of two sequences of ints (lists or int32 arrays)."""
    if KERNEL_BACKEND == "cython":
        return _lcs_ids(
            np.ascontiguousarray(a, dtype=np.intc),
            np.ascontiguousarray(b, dtype=np.intc),
        )
    return _lcs_ids(a, b)


def lcs_tokens(a, b) -> int:
    """LCS length of two token sequences, interning tokens to ids first."""
    ids: dict = {}
    a_ids = [ids.setdefault(t, len(ids)) for t in a]
    b_ids = [ids.setdefault(t, len(ids)) for t in b]
    return lcs_ids(a_ids, b_ids)
