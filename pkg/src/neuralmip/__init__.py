"""Neural MIP solving toolkit for day-ahead unit commitment."""

__version__ = "0.1.0"
