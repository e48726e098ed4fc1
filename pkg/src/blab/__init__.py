"""Numerical laboratory for Bergman kernels of grid domains.

Submodules: geom (domains and set metrics), basis (holomorphic families and
Gram matrices), kernel (finite-rank and closed-form kernels), zeros (scans,
winding counts, certificates, verdicts), lab (experiment drivers and
reports), cli (the `blab` entry point).
"""

__version__ = "0.1.0"

from . import basis, geom, kernel, lab, zeros  # noqa: F401
