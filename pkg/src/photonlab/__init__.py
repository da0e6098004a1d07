"""Numerical models of a heralded single-photon source and its detectors.

Submodules: ``fock`` (photon statistics and loss), ``source`` (OPO heralding),
``snspd`` (detector response), ``homodyne`` (quadrature sampling),
``tomography`` (maximum-likelihood reconstruction), ``thinfilm`` (stack
optics), ``pipeline``/``cli`` (scenario runs).
"""

__version__ = "0.1.0"
