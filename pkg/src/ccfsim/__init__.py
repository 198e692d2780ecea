"""Common-cause failure simulation with the generalized Atwood shock model."""

__version__ = "0.1.0"
