"""baxterchain: deformed sl2 spin-chain operators on truncated spaces.

Subpackages by role:

- ``special``   q-products, Jacobi thetas, elliptic gamma, shift constants
- ``ladder``    exact graded-ladder normal form and dense lattice matrices
- ``trig``      the q-deformed chain: L, S-operators, R-operators, t, Q
- ``elliptic``  the elliptic chain: theta-matrix L, integral intertwiner, Q
- ``harness``   check registry, suite runner, machine-readable reports
"""

__version__ = "0.1.0"
