"""Moment formulas for Siegel transforms with congruence conditions in the plane.

Exact oracles (orbit counts, totient sums, lattice point enumeration) and
seeded Monte Carlo over Haar-random lattices of SL2(R)/Gamma(N).
"""

__version__ = "0.1.0"
