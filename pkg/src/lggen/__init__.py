"""Generate annotated NLU training data from modular local grammar graphs."""

__version__ = "0.1.0"
