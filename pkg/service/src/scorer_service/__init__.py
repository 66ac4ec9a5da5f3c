"""Reference scorer service for the attribution toolkit wire protocol."""

__version__ = "0.1.0"
