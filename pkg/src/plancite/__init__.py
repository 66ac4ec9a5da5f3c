"""plancite: question-blueprint planning, silver citation annotation, and
attribution evaluation for long-form question answering data."""

__version__ = "0.1.0"
