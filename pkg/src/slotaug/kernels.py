"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is used. Set ``SLOTAUG_PURE=1`` to force the fallback.
"""

import os

from . import _fallback
from ._fallback import BAND_EPS, band

BACKEND = "python"
_impl = _fallback

if not os.environ.get("SLOTAUG_PURE"):
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

isolated_flags = _impl.isolated_flags
count_pairs = _impl.count_pairs
bilinear_resize = _impl.bilinear_resize

__all__ = [
    "BACKEND", "BAND_EPS", "band",
    "isolated_flags", "count_pairs", "bilinear_resize",
]
