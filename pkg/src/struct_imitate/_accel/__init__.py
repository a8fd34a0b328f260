"""Backend selection for the descent hot loops.

The compiled Cython core is preferred; the pure-NumPy fallback is picked up
automatically when the extension was not built. ``BACKEND`` records which
one is active.
"""

try:
    from . import _descent as _impl

    BACKEND = "compiled"
except ImportError:  # extension not built; run on NumPy
    from . import fallback as _impl

    BACKEND = "numpy"

sphere_descent = _impl.sphere_descent
cylinder_descent = _impl.cylinder_descent
