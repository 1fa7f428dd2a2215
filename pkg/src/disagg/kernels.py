"""Backend selection for the projection kernels.

The compiled extension is used when it imports; set ``DISAGG_PURE=1`` to
force the numpy fallback. Both expose::

    project_rows(Y, E, L, U, out) -> int
    apm_step(Y, E, L, U, p, X_out, Y_out, nu_out) -> int

All arrays are C-contiguous float64. The return value is ``-1`` on success,
otherwise the index of the first agent whose constraint set is empty.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("DISAGG_PURE", "") != "1":
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for the default)."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:  # pragma: no cover
        pass
    return names


project_rows = _impl.project_rows
apm_step = _impl.apm_step
