"""Monte Carlo simulation and moment verification for paraxial waves in random media.

The package is organized around six pieces:

``specklesim.core``
    Covariance/spectrum models of the medium, regime scalings, transverse
    grids and incident-beam specifications.
``specklesim.propagate``
    Pathwise split-step spectral solver over Gaussian phase screens and the
    seeded, mergeable ensemble runner.
``specklesim.moments``
    Closed-form / quadrature evaluation of first and second moments, their
    kinetic and diffusive limits, and the anomalous mean-intensity diffusion.
``specklesim.gaussianity``
    Pairing combinatorics, complex Gaussian moment functionals, empirical
    moment estimation, and the speckle statistics test battery.
``specklesim.momentpde``
    Direct Fourier-domain solver for the phase-compensated moment evolution
    together with its Gaussian approximation and oscillatory-integral bound
    checks.
``specklesim.cli``
    Configuration loading, run orchestration and persistence.
"""

__version__ = "0.1.0"

from . import core, gaussianity, moments, momentpde, propagate  # noqa: F401
