"""Backend selection for the hot matrix kernels.

The compiled extension is preferred. Setting ``TOPFIBER_PURE_PYTHON=1`` in
the environment before import forces the numpy fallback; ``use_backend``
switches at runtime (tests and the benchmark use it to compare both).
"""

import os
import types

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_NAMES = ("row_counts", "col_counts", "rect_count", "clear_rect", "clear_covered")

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

_active = types.SimpleNamespace(name=None)


def use_backend(name):
    """Route all kernel calls to backend ``name`` ("compiled" or "python")."""
    try:
        module = BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} unavailable; have {sorted(BACKENDS)}"
        ) from None
    g = globals()
    for fn in _NAMES:
        g[fn] = getattr(module, fn)
    _active.name = name


def active_backend():
    return _active.name


if os.environ.get("TOPFIBER_PURE_PYTHON") or _ckernels is None:
    use_backend("python")
else:
    use_backend("compiled")
