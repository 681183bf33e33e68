"""
Utility functions package for the gaussbesov toolkit
"""

from .helpers import *

__version__ = "0.1.0"
