"""Conditional-expectation attribution for black-box regression models.

The heavy lifting lives in the compiled extension; this package re-exports it.
"""

try:  # installed wheel: extension inside the package
    from ._slimshap import *  # noqa: F401,F403
    from . import _slimshap as _core
except ImportError:  # in-tree build: extension directory on sys.path
    from _slimshap import *  # type: ignore # noqa: F401,F403
    import _slimshap as _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
__version__ = "0.1.0"
