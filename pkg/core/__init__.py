"""
MILSEQ - Weakly supervised sequence learning core module
"""

__version__ = "1.0.0"
