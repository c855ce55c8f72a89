"""Long-term fairness dynamics of rank-ordered institutions selecting from a shared pool."""

__version__ = "0.1.0"
