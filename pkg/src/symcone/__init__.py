"""Numerical toolkit for concave symmetric operators on Garding-type cones
and the radial fully nonlinear Loewner-Nirenberg problem on the unit ball.
"""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
