"""Penalized maximum least squares estimation for linear regression whose
errors carry distribution uncertainty.

The heavy lifting lives in the compiled extension; this package re-exports it.
"""

from pmls._core import *  # noqa: F401,F403
from pmls._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__doc__ = _core_doc or __doc__
