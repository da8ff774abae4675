"""Pseudo-spectral laboratory for Yang-Mills-Higgs fields in Lorenz gauge.

Subpackages by role:

- ``algebra``: so(n)/su(n) matrix Lie algebra layer
- ``grid``: periodic grid, transforms, Fourier multipliers, norms
- ``nullform``: null forms, bilinear symbols and their bound checkers
- ``system``: the gauge field equations, nonlinearities and their null split
- ``data``: Cauchy data factory and constraint checks
- ``evolve``: half-wave reduction, exponential integrators, Picard iteration
- ``diagnose``: energy, constraint propagation, gauge covariance
- ``normlab``: space-time norms and empirical estimate probes
- ``cli``: batch front door (``ymh`` entry point)
"""

__version__ = "0.1.0"
