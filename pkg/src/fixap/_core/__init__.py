"""Round-sampling kernels.

``_sampling`` is the compiled (Cython) implementation; ``_sampling_py`` is
the pure-Python fallback with the identical contract.  The compiled one is
used when it imports, unless ``FIXAP_PURE_PYTHON`` is set to a non-empty
value other than ``0``.
"""

import os

from . import _sampling_py

_force_py = os.environ.get("FIXAP_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_py:
        raise ImportError("pure-Python kernels requested")
    from . import _sampling as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _sampling_py
    BACKEND = "python"

sample_rounds = _impl.sample_rounds
joint_histogram = _impl.joint_histogram

BACKENDS = {"python": _sampling_py}
if BACKEND == "cython":
    BACKENDS["cython"] = _impl
else:
    try:
        from . import _sampling as _compiled

        BACKENDS["cython"] = _compiled
    except ImportError:
        pass


def get_backend(name=None):
    """Kernel module by name; ``None`` gives the one selected at import."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available "
                         f"(have: {', '.join(sorted(BACKENDS))})") from None
