"""Multi-source directed reachability toolkit."""

__version__ = "0.1.0"
