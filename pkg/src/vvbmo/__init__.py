"""Numerical tools for vector-valued BMO, Carleson measures and square functions.

Submodules:

* :mod:`vvbmo.quadrature` – circle, radial and disc quadrature rules
* :mod:`vvbmo.normed_spaces` – ``ℓ^p_d`` norms and moduli of convexity/smoothness
* :mod:`vvbmo.disc_harmonics` – vector trigonometric polynomials and their extensions
* :mod:`vvbmo.functionals` – BMO, square-function and Carleson functionals
* :mod:`vvbmo.halfplane_kernels` – half-plane kernels and cone operators
* :mod:`vvbmo.experiments` – study runners and the ``vvbmo`` CLI
"""

__version__ = "0.1.0"
