"""
SDMASK - Sigma-delta detection with input region masking
Simulates an event-driven detector on video, masks input regions statically
and per frame, and reports hardware cost metrics.
"""

__version__ = "1.0.0"
