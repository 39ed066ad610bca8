"""Simulator and compiler for a two-dimensional intrinsically universal partitioned QCA."""

__version__ = "0.1.0"
