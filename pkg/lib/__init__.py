"""rcp-domains: disinformation-resilient domains under relaxed clique percolation."""

__version__ = "0.1.0"
