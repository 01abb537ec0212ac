"""Coverage-guided falsification of temporal-logic traffic laws."""

__version__ = "0.1.0"
