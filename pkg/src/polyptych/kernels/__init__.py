"""Convolution kernel backend, selected once at import.

The compiled Cython extension is preferred when present; otherwise the numpy
im2col implementation is used. Set ``POLYPTYCH_PURE_PYTHON=1`` to force the
fallback (useful for benchmarking the two against each other).
"""

import os

from . import _conv_py

if os.environ.get("POLYPTYCH_PURE_PYTHON"):
    _impl = _conv_py
else:
    try:
        from . import _convcy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _conv_py

BACKEND = _impl.BACKEND
conv2d_forward = _impl.conv2d_forward
conv2d_backward_input = _impl.conv2d_backward_input
conv2d_backward_weight = _impl.conv2d_backward_weight


def available_backends():
    """Names of importable backends, compiled one first when present."""
    names = []
    try:
        from . import _convcy  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names


def get_backend(name):
    if name == "python":
        return _conv_py
    if name == "cython":
        from . import _convcy

        return _convcy
    raise ValueError(f"unknown kernel backend: {name!r}")
