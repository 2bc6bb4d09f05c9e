"""deckmap: exact computation with rational maps on the Riemann sphere.

Core objects: Gaussian-rational arithmetic and polynomials (``algebra``),
rational maps with critical/fiber structure (``ratmap``), Moebius
transformations and finite group machinery (``mobius``), deck groups of
iterates (``deck``), critical-point/value detection from iterates
(``detect``), numeric rendering (``dynren``), an expression parser
(``mapexpr``), and the report/CLI/service front ends.
"""

__version__ = "0.1.0"

from .algebra import ComplexFloat, ComplexPoly, GaussianRational, gr
from .ratmap import INF, RationalMap, SpherePoint

__all__ = [
    "ComplexFloat",
    "ComplexPoly",
    "GaussianRational",
    "gr",
    "INF",
    "RationalMap",
    "SpherePoint",
    "__version__",
]
