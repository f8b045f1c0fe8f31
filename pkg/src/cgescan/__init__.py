"""Function-level smart-contract vulnerability scanner combining expert
security patterns with a temporal graph network over contract graphs."""

__version__ = "0.1.0"
