"""Offline token-vector store exporter."""

__version__ = "0.1.0"
