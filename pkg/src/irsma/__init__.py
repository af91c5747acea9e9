"""Simulation and optimization toolkit for a reflecting-surface-assisted
downlink with movable transmit antennas."""

from .config import IrsGeometry, Scenario, TransmitRegion

__all__ = ["IrsGeometry", "Scenario", "TransmitRegion"]
__version__ = "0.1.0"
