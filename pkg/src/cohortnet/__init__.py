"""Author turnover, survival and co-authorship network resilience for one institution."""

__version__ = "0.1.0"
