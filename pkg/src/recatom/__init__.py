"""Records and endpoint hitting times for iid laws with atom endpoints."""

__version__ = "0.1.0"
