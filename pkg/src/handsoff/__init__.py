"""Set-based hands-off control for discrete-time linear systems.

The package provides polytope algebra (`polytope`), plant modelling and
derived sets (`model`), controller realizations and closed loops
(`controller`), verification of the invariance conditions with certified
scalars (`conditions`), the online switching state machine (`runtime`),
closed-loop scenario simulation (`simulate`), iterative LMI-based joint
synthesis of controller and set pair (`synthesis`) and a command-line
front end (`cli`).
"""

from .tolerances import DEFAULT_TOL, ToleranceProfile

__all__ = ["DEFAULT_TOL", "ToleranceProfile"]

__version__ = "0.1.0"
