"""Spin-boson decoherence and quasi-classical spin dynamics."""

__version__ = "0.1.0"
