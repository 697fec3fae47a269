"""Small-sample confidence and credible intervals for evaluation data."""

__version__ = "0.1.0"
