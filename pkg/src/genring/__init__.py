"""genring: computer algebra for shape-indexed commutative generalized rings.

Carriers are indexed by finite sets and by partial maps between them;
multiplication and contraction are adjoint along each map.  The package
ships the standard models (the field with one element, semiring vectors,
the real integers site, monoid rings), the tree calculus with its oriented
refinement, spectra with localization and gluing, and the desk-scale
arithmetic layer (divisors, valuations, the projective line map).
"""

from __future__ import annotations

__version__ = "0.1.0"
