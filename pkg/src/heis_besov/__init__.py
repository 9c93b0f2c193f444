"""Harmonic analysis on the Heisenberg group H^n and the parabolic Anderson model.

Modules: group_core, special_functions, spectral, littlewood_paley,
heat_flow, paraproduct, stochastics, pam_solver, cli.
"""

__version__ = "0.1.0"
