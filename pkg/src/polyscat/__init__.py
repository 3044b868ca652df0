"""Time-harmonic scattering by piecewise-constant polyhedral media.

Forward solves of the Lippmann-Schwinger equation on uniform grids, far-field
patterns, Laplace transforms of polyhedral cones at isotropic complex
frequencies, numerical checks of the corner-scattering identities, and
distinguishability / reconstruction experiments for cell values.
"""

__version__ = "0.1.0"
