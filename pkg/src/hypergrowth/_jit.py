"""Optional numba acceleration.

Every jitted function in this package is plain Python that also runs
unjitted; if numba is missing the decorator degrades to a no-op and the
simulation falls back to the (much slower) interpreted path.
"""

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def decorate(func):
            return func

        return decorate
