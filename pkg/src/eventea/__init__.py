"""Entity alignment toolkit for event-centric knowledge graphs."""

__version__ = "0.1.0"
