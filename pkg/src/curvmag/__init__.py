"""Factorisation chains and Landau-type spectra for magnetic Schrodinger operators on surfaces."""

__version__ = "0.1.0"
