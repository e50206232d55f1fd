"""Numerical tolerances threaded explicitly through the library.

There are no hidden module-level knobs: every routine that needs a tolerance
takes a :class:`ToleranceProfile` (or a scalar documented at its signature).
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ToleranceProfile:
    """Bundle of numerical tolerances.

    Attributes
    ----------
    lp_feas : float
        Feasibility tolerance for LP solutions (per-constraint residual).
    psd : float
        Acceptable eigenvalue deficit when re-checking LMI blocks of an
        SDP solution.
    eq : float
        Acceptable residual on linear equality constraints of an SDP.
    set_containment : float
        Facet slack allowed in polytope containment checks on synthesized
        (full-precision) data.
    published : float
        Facet slack allowed when verifying matrices that were transcribed
        from 4-decimal published tables.
    schur : float
        Margin below 1 required of the spectral radius for a Schur verdict.
    rank_rel : float
        Relative singular-value cutoff for rank decisions (minimal
        realization, degeneracy detection).
    dedup : float
        Absolute distance below which vertices/facets are merged.
    psd_margin : float
        Strict matrix inequalities "M > 0" are realized as "M >= margin*I";
        this is that margin.
    sing : float
        Minimum singular value below which a square factor is declared
        numerically singular.
    """

    lp_feas: float = 1e-9
    psd: float = 1e-7
    eq: float = 1e-8
    set_containment: float = 1e-8
    published: float = 5e-3
    schur: float = 1e-9
    rank_rel: float = 1e-9
    dedup: float = 1e-9
    psd_margin: float = 1e-7
    sing: float = 1e-9

    def with_(self, **kwargs) -> "ToleranceProfile":
        """Copy of the profile with selected fields replaced."""
        return replace(self, **kwargs)


DEFAULT_TOL = ToleranceProfile()
