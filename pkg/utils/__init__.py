"""Numerical laboratory for two-body Schrödinger scattering."""
