"""Numerical certification of the spectral non-degeneracy conditions
behind a radial Schroedinger/wave blow-up construction.

The package computes every explicitly defined object of the construction
(ground-state profiles, distorted and free radial Fourier data, temporal
multipliers, the Fredholm apparatus of the wave operator) and emits
pass/fail certificates with margins for the numerical assumptions
(S1), (A1), (B1)-(B3), (C1)-(C3) plus the named constants.
"""

__version__ = "0.1.0"

from .config import NumericsConfig, load_config           # noqa: F401
from .certs import Certificate, make_certificate          # noqa: F401
