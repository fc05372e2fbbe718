"""Koopman operator uncertainty propagation and filtering toolkit."""

__version__ = "1.0.0"
