"""Lyapunov-operator finite-difference solver for the 2D Boussinesq equation."""

__version__ = "0.1.0"
