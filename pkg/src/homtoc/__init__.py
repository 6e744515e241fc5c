"""Time-optimal control of parabolic systems with oscillating coefficients."""

__version__ = "0.1.0"
