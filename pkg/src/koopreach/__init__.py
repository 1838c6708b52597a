"""Data-driven reachability verification with Koopman reach-time bounds."""

__version__ = "0.1.0"
