"""
Utility functions for SDMASK
"""

from src.primary.utils.logger import debug_log, get_logger

__all__ = ['debug_log', 'get_logger']
