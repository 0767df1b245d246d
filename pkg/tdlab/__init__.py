"""
tdlab - policy-evaluation laboratory for projected Bellman error tracking
"""

__version__ = "1.0.0"
