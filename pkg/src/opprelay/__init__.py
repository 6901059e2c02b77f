"""Opportunistic relay selection for hybrid-ARQ relay networks."""
__version__ = "0.1.0"
