"""
tdlab Configuration
Re-exports from tdlab.core.config for convenience
"""

# Either import path works:
#   from tdlab.config import get_settings
#   from tdlab.core.config import get_settings
from tdlab.core.config import Settings, get_settings

__all__ = ["Settings", "get_settings"]
