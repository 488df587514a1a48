"""Inner-loop kernels: compiled extension when available, numpy otherwise.

The backend is fixed at import. Set ``KGCONTRAST_BACKEND=python`` to force
the numpy fallback even when the extension is built.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("KGCONTRAST_BACKEND", "").lower() != "python":
    try:
        from . import _ext as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py

adagrad_rows = _impl.adagrad_rows
scatter_add_rows = _impl.scatter_add_rows
filtered_ranks = _impl.filtered_ranks
contrastive_coefficients = _impl.contrastive_coefficients


def get_backend(name):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _ext

        return _ext
    raise ValueError(f"unknown kernel backend {name!r}")
