"""Space-time-varying graph engine for crash high-risk location analysis."""

__version__ = "0.1.0"
