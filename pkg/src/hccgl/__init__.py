"""Hybrid cooperative co-evolutionary guidance: planar multi-missile engagement
simulator, neural consensus controller and the natural co-evolutionary
strategy that trains it."""

__version__ = "0.1.0"
