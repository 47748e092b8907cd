"""Semiclassical pseudospectra laboratory.

Numerical experiments on non-self-adjoint semiclassical operators near
boundary points of the range of the symbol: bracket-order classification,
phase-space weight evolution, semigroup decay, quadrature resolvents and
the scaling of the region where the resolvent stays tame.
"""

__version__ = "0.1.0"
