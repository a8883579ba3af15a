"""Multi-agent informative path planning with intent sharing."""

__version__ = "0.1.0"
